use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernels::{Direction, FrequencyProfile};
use super::{KernelSpec, Result, TheoryError};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CovarianceOptions {
    /// Periodic trapezoid nodes for the outer `alpha` integral.
    pub n_alpha: usize,
    /// Grid step of the numerical correlation `G * G`.
    pub t_step: f64,
    /// The correlation integral is truncated to `|t| <= t_max`.
    pub t_max: f64,
}

impl Default for CovarianceOptions {
    fn default() -> Self {
        Self { n_alpha: 2000, t_step: 0.05, t_max: 20.0 }
    }
}

impl CovarianceOptions {
    fn validate(&self) -> Result<()> {
        if self.n_alpha < 4 || !(self.t_step > 0.0) || !(self.t_max > self.t_step) {
            return Err(TheoryError::InvalidSpec(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Directions with nonzero noise on the curves through `x0`.
fn weighted_directions(
    spec: &KernelSpec,
    sigma: &(dyn Fn(f64, f64) -> f64 + Sync),
    n_alpha: usize,
) -> Result<Vec<(Direction, f64)>> {
    let mut out = Vec::with_capacity(n_alpha);
    for k in 0..n_alpha {
        let alpha = k as f64 * TAU / n_alpha as f64;
        let dir = Direction::new(&spec.model, spec.x0, alpha)?;
        let s = sigma(alpha, dir.phi);
        if s != 0.0 {
            out.push((dir, s * s));
        }
    }
    Ok(out)
}

/// `C(x_check)` from the squared-spectrum formula, integrated over `alpha`
/// by the periodic trapezoid rule. `sigma(alpha, rho)` is the noise level on
/// the curve through `x0`.
pub fn covariance(
    x_check: Point2,
    spec: &KernelSpec,
    sigma: &(dyn Fn(f64, f64) -> f64 + Sync),
    opts: &CovarianceOptions,
) -> Result<f64> {
    spec.validate()?;
    opts.validate()?;
    let dirs = weighted_directions(spec, sigma, opts.n_alpha)?;
    let terms: Vec<f64> = dirs
        .par_iter()
        .map(|(dir, s2)| {
            let p = dir.theta.dot(x_check);
            // the profile carries (mu W / pi)^2; the formula wants mu^2 W^2 / pi
            PI * FrequencyProfile::from_direction(spec, dir, p.abs(), 2).eval(p) * s2
        })
        .collect();
    Ok(terms.iter().sum::<f64>() * TAU / opts.n_alpha as f64)
}

/// `C(0)`, the pointwise variance.
pub fn variance_at(spec: &KernelSpec, sigma: &(dyn Fn(f64, f64) -> f64 + Sync), opts: &CovarianceOptions) -> Result<f64> {
    covariance(Point2::ZERO, spec, sigma, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GgCorrelation {
    pub value: f64,
    /// Contribution of `|t| > t_max`, already included in `value`, from the
    /// leading decay `G(t) ~ -c / t^2`.
    pub tail: f64,
}

/// `int_T^inf t^-2 (t + p)^-2 dt + int_T^inf t^-2 (t - p)^-2 dt` for `|p| < T`.
fn tail_pair(t_max: f64, p: f64) -> f64 {
    let r = (p / t_max).powi(2);
    let mut term = 1.0;
    let mut sum = 0.0;
    for n in (0..60).step_by(2) {
        let add = (n + 1) as f64 * term / (n + 3) as f64;
        sum += add;
        if add < 1e-17 * sum {
            break;
        }
        term *= r;
    }
    2.0 * sum / t_max.powi(3)
}

/// Tabulated `G` on `t_k = k h` and its cosine moments `A(lambda_i)`.
struct Correlator {
    profile: FrequencyProfile,
    moments: Vec<f64>,
    /// `c` in `G(t) ~ -c / t^2`, `c = mu W / (pi Q0)`.
    decay: f64,
    t_max: f64,
}

impl Correlator {
    fn new(spec: &KernelSpec, dir: &Direction, p_max: f64, opts: &CovarianceOptions) -> Self {
        let h = opts.t_step;
        let n = (opts.t_max / h).ceil() as usize + 1;
        let t_max = (n - 1) as f64 * h;
        let profile = FrequencyProfile::from_direction(spec, dir, t_max + p_max, 1);
        let g = profile.eval_grid(h, n);
        // trapezoid moments A(lambda) = h sum' G(t_k) cos(lambda t_k) over |k| <= K, G even
        let last = n - 1;
        let moments = profile
            .lambda
            .iter()
            .map(|&l| {
                let (ds, dc) = (l * h).sin_cos();
                let (mut s, mut c) = (0.0, 1.0);
                let mut acc = 0.0;
                for (k, gk) in g.iter().enumerate() {
                    let m = if k == 0 || k == last { 1.0 } else { 2.0 };
                    acc += m * gk * c;
                    let c_next = c * dc - s * ds;
                    s = s * dc + c * ds;
                    c = c_next;
                }
                acc * h
            })
            .collect();
        let decay = spec.mu * dir.weight / (PI * dir.q0);
        Self { profile, moments, decay, t_max }
    }

    /// `h sum_k G(t_k) G(t_k + p)`.
    fn value(&self, p: f64) -> GgCorrelation {
        let body: f64 = self
            .profile
            .lambda
            .iter()
            .zip(&self.profile.weight)
            .zip(&self.moments)
            .map(|((l, w), a)| w * (l * p).cos() * a)
            .sum();
        let tail = self.decay * self.decay * tail_pair(self.t_max, p.min(0.9 * self.t_max));
        GgCorrelation { value: body + tail, tail }
    }
}

/// `(G * G)(alpha, p) = int G(alpha, p + t) G(alpha, t) dt` at `x0`, by the
/// trapezoid rule on `|t| <= t_max` plus the asymptotic tail.
pub fn gg_correlation(alpha: f64, p: f64, spec: &KernelSpec, opts: &CovarianceOptions) -> Result<GgCorrelation> {
    spec.validate()?;
    opts.validate()?;
    let dir = Direction::new(&spec.model, spec.x0, alpha)?;
    Ok(Correlator::new(spec, &dir, p.abs(), opts).value(p))
}

/// `C` at several offsets through the numerical autocorrelation of `G`,
/// `C(x) = int (G * G)(alpha, Theta . x) sigma^2 d alpha`.
pub fn covariance_via_correlation(
    offsets: &[Point2],
    spec: &KernelSpec,
    sigma: &(dyn Fn(f64, f64) -> f64 + Sync),
    opts: &CovarianceOptions,
) -> Result<Vec<f64>> {
    spec.validate()?;
    opts.validate()?;
    let dirs = weighted_directions(spec, sigma, opts.n_alpha)?;
    let p_max = offsets.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let rows: Vec<Vec<f64>> = dirs
        .par_iter()
        .map(|(dir, s2)| {
            let corr = Correlator::new(spec, dir, p_max, opts);
            offsets.iter().map(|x| corr.value(dir.theta.dot(*x)).value * s2).collect()
        })
        .collect();
    let scale = TAU / opts.n_alpha as f64;
    Ok((0..offsets.len()).map(|i| rows.iter().map(|r| r[i]).sum::<f64>() * scale).collect())
}
