//! Gauss-Legendre rules and the sine integral.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

/// `n`-point Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess, then Newton on P_n
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h
    }

    /// Sums the rule over consecutive intervals `[edges[i], edges[i+1]]`.
    pub fn integrate_pieces(&self, edges: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
        edges.windows(2).map(|e| self.integrate(e[0], e[1], &mut f)).sum()
    }

    /// Nodes and weights of the composite rule on the given panel edges.
    pub fn composite(&self, edges: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut xs = Vec::with_capacity(edges.len().saturating_sub(1) * self.len());
        let mut ws = Vec::with_capacity(xs.capacity());
        for e in edges.windows(2) {
            let (m, h) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                xs.push(m + h * x);
                ws.push(w * h);
            }
        }
        (xs, ws)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Uniform panel edges on `[a, b]` with width at most `width`.
pub fn uniform_edges(a: f64, b: f64, width: f64) -> Vec<f64> {
    let n = ((b - a) / width).ceil().max(1.0) as usize;
    let mut e: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    e[n] = b;
    e
}

/// Sorted edges covering `[a, b]` that include every breakpoint inside and
/// have width at most `width`.
pub fn split_edges(a: f64, b: f64, breaks: &[f64], width: f64) -> Vec<f64> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    cuts.push(a);
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-13);
    let mut edges = vec![cuts[0]];
    for w in cuts.windows(2) {
        let sub = uniform_edges(w[0], w[1], width);
        edges.extend_from_slice(&sub[1..]);
    }
    edges
}

/// Panel layout for the semi-infinite frequency integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    /// Smallest truncation point; extended when the integrand tail is heavier.
    pub lambda_max: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
    /// Tail bound relative to the integrand peak that fixes the truncation.
    pub tail_rel: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { lambda_max: 40.0, panels: 80, nodes_per_panel: 16, tail_rel: 1e-12 }
    }
}

impl QuadratureSpec {
    /// Both panel count and truncation doubled.
    pub fn doubled(&self) -> Self {
        Self { lambda_max: 2.0 * self.lambda_max, panels: 4 * self.panels, ..*self }
    }

    pub fn panel_width(&self) -> f64 {
        self.lambda_max / self.panels as f64
    }
}

/// Sine integral `Si(x) = int_0^x sin t / t dt`.
pub fn sine_integral(x: f64) -> f64 {
    if x < 0.0 {
        return -sine_integral(-x);
    }
    if x <= 4.0 {
        // power series; alternating terms stay small for x <= 4
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut k = 1.0;
        loop {
            term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
            let add = term / (2.0 * k + 1.0);
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
            k += 1.0;
        }
        return sum;
    }
    // E1(ix) = -Ci(x) + i (Si(x) - pi/2)
    let (_, im) = e1_imag(x);
    FRAC_PI_2 + im
}

/// `E1(i x)` for `x > 0` by its continued fraction.
fn e1_imag(x: f64) -> (f64, f64) {
    // modified Lentz
    type C = (f64, f64);
    let mul = |a: C, b: C| (a.0 * b.0 - a.1 * b.1, a.1 * b.0 + a.0 * b.1);
    let inv = |a: C| {
        let d = a.0 * a.0 + a.1 * a.1;
        (a.0 / d, -a.1 / d)
    };
    let mut b: C = (1.0, x);
    let mut c: C = (1e300, 0.0);
    let mut d: C = inv(b);
    let mut h: C = d;
    for i in 1..1000 {
        let a = -((i * i) as f64);
        b = (b.0 + 2.0, b.1);
        d = inv((a * d.0 + b.0, a * d.1 + b.1));
        let ci = inv(c);
        c = (b.0 + a * ci.0, b.1 + a * ci.1);
        let del = mul(c, d);
        h = mul(h, del);
        if (del.0 - 1.0).abs() + del.1.abs() < 1e-16 {
            break;
        }
    }
    // E1(ix) = e^{-ix} h
    let (s, co) = x.sin_cos();
    mul((co, -s), h)
}
