use std::f64::consts::{FRAC_PI_2, PI};

use super::quadrature::{sine_integral, split_edges, uniform_edges, GaussLegendre};
use super::{KernelSpec, Result};
use crate::data::{keys_kernel, keys_kernel_ft};
use crate::geometry::{Point2, GrtModel};

/// Geometry of one direction `alpha` at a point `x`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Direction {
    pub theta: Point2,
    pub phi: f64,
    pub phi_prime: f64,
    /// Unsigned chord distance `a(x, alpha)`.
    pub a: f64,
    pub q0: f64,
    pub weight: f64,
}

impl Direction {
    pub fn new(model: &GrtModel, x: Point2, alpha: f64) -> Result<Self> {
        let theta = model.grad_x_phi(x, alpha)?;
        Ok(Self {
            theta,
            phi: model.phi(x, alpha)?,
            phi_prime: model.phi_alpha_prime(x, alpha)?,
            a: model.chord_distance(x, alpha)?,
            q0: model.q0(x, theta)?,
            weight: model.weight(),
        })
    }

    /// Regularized symbol along the conormal, `lambda / (Q0 + kappa lambda^3)`.
    #[inline]
    pub fn symbol(&self, lambda: f64, kappa: f64) -> f64 {
        lambda / (self.q0 + kappa * lambda * lambda * lambda)
    }
}

/// Envelope of `|keys_kernel_ft|` used only to place the truncation point.
fn ft_envelope(u: f64) -> f64 {
    let u = u.abs();
    if u < 2.0 {
        return 2.0;
    }
    let r = 2.0 / u;
    (r * r * r * (3.0 * r + 2.0)).min(2.0)
}

/// `G(x, alpha, .)` as a cosine sum `sum_i w_i cos(lambda_i q)`.
#[derive(Debug, Clone)]
pub struct FrequencyProfile {
    pub lambda: Vec<f64>,
    /// Quadrature weight times `(mu W / pi) b0 i(lambda) i(mu a lambda)`.
    pub weight: Vec<f64>,
    /// Truncation point actually used.
    pub cutoff: f64,
}

impl FrequencyProfile {
    /// Rule accurate for `|q| <= q_max`.
    pub fn new(spec: &KernelSpec, x: Point2, alpha: f64, q_max: f64) -> Result<Self> {
        let dir = Direction::new(&spec.model, x, alpha)?;
        Ok(Self::from_direction(spec, &dir, q_max, 1))
    }

    /// Same layout with the integrand raised to `power` (1 for `G`, 2 for `C`).
    pub(crate) fn from_direction(spec: &KernelSpec, dir: &Direction, q_max: f64, power: i32) -> Self {
        let quad = &spec.quadrature;
        let ma = spec.mu * dir.a;
        let base = dir.weight * spec.mu / PI;
        let integrand = |l: f64| base * dir.symbol(l, spec.kappa) * keys_kernel_ft(l) * keys_kernel_ft(ma * l);
        let envelope = |l: f64| base * dir.symbol(l, spec.kappa) * ft_envelope(l) * ft_envelope(ma * l);
        // the integrand peaks well inside [0, 4]
        let peak = (1..=400).map(|k| integrand(k as f64 * 0.01).abs()).fold(0.0, f64::max);
        let mut cutoff = quad.lambda_max;
        while envelope(cutoff).powi(power) > quad.tail_rel * peak.powi(power) && cutoff < 1e4 {
            cutoff *= 1.25;
        }
        let mut width = quad.panel_width();
        if q_max > 0.0 {
            width = width.min(8.0 / q_max);
        }
        let gl = GaussLegendre::new(quad.nodes_per_panel);
        let (lambda, w) = gl.composite(&uniform_edges(0.0, cutoff, width));
        let weight = lambda.iter().zip(&w).map(|(&l, &w)| w * integrand(l).powi(power)).collect();
        Self { lambda, weight, cutoff }
    }

    pub fn eval(&self, q: f64) -> f64 {
        self.lambda.iter().zip(&self.weight).map(|(l, w)| w * (l * q).cos()).sum()
    }

    /// Values at `q_k = k h`, `k = 0..n`, by a rotation recurrence.
    pub fn eval_grid(&self, h: f64, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (&l, &w) in self.lambda.iter().zip(&self.weight) {
            let (ds, dc) = (l * h).sin_cos();
            let (mut s, mut c) = (0.0, 1.0);
            for v in out.iter_mut() {
                *v += w * c;
                let c_next = c * dc - s * ds;
                s = s * dc + c * ds;
                c = c_next;
            }
        }
        out
    }
}

/// `G(x, alpha, q)` by direct cosine quadrature.
pub fn g_kernel(x: Point2, alpha: f64, q: f64, spec: &KernelSpec) -> Result<f64> {
    Ok(FrequencyProfile::new(spec, x, alpha, q.abs())?.eval(q))
}

/// `theta(t) = int i_p(t + mu Phi'_alpha s) i_alpha(s) ds`, both kernels Keys.
pub fn vartheta(t: f64, x: Point2, alpha: f64, spec: &KernelSpec) -> Result<f64> {
    let dir = Direction::new(&spec.model, x, alpha)?;
    Ok(vartheta_dir(t, spec.mu * dir.phi_prime, spec.quadrature.nodes_per_panel))
}

pub(crate) fn vartheta_dir(t: f64, c: f64, nodes: usize) -> f64 {
    let mut breaks: Vec<f64> = (-2..=2).map(|k| k as f64).collect();
    if c != 0.0 {
        breaks.extend((-2..=2).map(|k| (k as f64 - t) / c));
    }
    // both factors are cubic between breaks; 4 nodes integrate degree 7
    let gl = GaussLegendre::new(nodes.max(4));
    gl.integrate_pieces(&split_edges(-2.0, 2.0, &breaks, 4.0), |s| keys_kernel(t + c * s) * keys_kernel(s))
}

/// Fourier transform of [`vartheta`], `i(lambda) i(-mu Phi'_alpha lambda)`.
pub fn vartheta_ft(lambda: f64, x: Point2, alpha: f64, spec: &KernelSpec) -> Result<f64> {
    let dir = Direction::new(&spec.model, x, alpha)?;
    Ok(keys_kernel_ft(lambda) * keys_kernel_ft(-spec.mu * dir.phi_prime * lambda))
}

/// Frequency where the numeric part of `K0` stops and the analytic tail starts.
const K0_SPLIT: f64 = 200.0;

/// `K0(t) = (1/pi) int_0^inf b0(lambda) cos(lambda t) d lambda`.
///
/// Quadrature on `[0, 2 L]`; beyond `L` the leading `1/(kappa lambda^2)` part
/// is integrated in closed form through the sine integral and the remainder,
/// of order `lambda^-5`, numerically up to `2 L`.
pub fn k0_kernel(t: f64, x: Point2, alpha: f64, spec: &KernelSpec) -> Result<f64> {
    let dir = Direction::new(&spec.model, x, alpha)?;
    Ok(k0_dir(t, &dir, spec))
}

pub(crate) fn k0_dir(t: f64, dir: &Direction, spec: &KernelSpec) -> f64 {
    let kappa = spec.kappa;
    let l = K0_SPLIT.max(spec.quadrature.lambda_max);
    let mut width = spec.quadrature.panel_width();
    if t != 0.0 {
        width = width.min(8.0 / t.abs());
    }
    let gl = GaussLegendre::new(spec.quadrature.nodes_per_panel);
    let head = gl.integrate_pieces(&uniform_edges(0.0, l, width), |lam| dir.symbol(lam, kappa) * (lam * t).cos());
    let rest = gl.integrate_pieces(&uniform_edges(l, 2.0 * l, width), |lam| {
        (dir.symbol(lam, kappa) - 1.0 / (kappa * lam * lam)) * (lam * t).cos()
    });
    let at = t.abs();
    let lead_tail = ((l * at).cos() / l - at * (FRAC_PI_2 - sine_integral(l * at))) / kappa;
    (head + rest + lead_tail) / PI
}

/// `G(x, alpha, q) = mu W int K0(q - t) theta(t) dt`, an independent route to
/// [`g_kernel`].
pub fn g_kernel_by_convolution(x: Point2, alpha: f64, q: f64, spec: &KernelSpec) -> Result<f64> {
    let dir = Direction::new(&spec.model, x, alpha)?;
    let c = spec.mu * dir.phi_prime;
    let half = 2.0 + 2.0 * c.abs();
    let mut breaks = vec![q];
    for k in -2..=2 {
        for m in -2..=2 {
            breaks.push(k as f64 - c * m as f64);
        }
    }
    let nodes = spec.quadrature.nodes_per_panel;
    let gl = GaussLegendre::new(nodes);
    let integral = gl.integrate_pieces(&split_edges(-half, half, &breaks, 0.25), |t| {
        k0_dir(q - t, &dir, spec) * vartheta_dir(t, c, nodes)
    });
    Ok(spec.mu * dir.weight * integral)
}
