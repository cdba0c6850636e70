//! Theory tables and their internal consistency checks.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::montecarlo::sigma_on_curves;
use super::stats::{all_pass, Check};
use super::HarnessError;
use crate::geometry::Point2;
use crate::theory::{
    converged, covariance, covariance_via_correlation, g_kernel, g_kernel_by_convolution, variance_at,
    CovarianceOptions, CurveKind, FrequencyProfile, KernelSpec, TheoryCurve,
};

/// `q` values where the two routes to `G` are compared.
pub const G_PROBES: [f64; 3] = [0.0, 1.5, 4.0];
/// Multiples of `x_check` where the two routes to `C` are compared.
pub const C_PROBES: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GProbe {
    pub q: f64,
    pub direct: f64,
    pub convolution: f64,
    pub refined: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CProbe {
    pub offset: Point2,
    pub spectral: f64,
    pub correlation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    /// Direction of the `G` table, the angle of the impulse node.
    pub alpha: f64,
    pub mu: f64,
    pub c0: f64,
    pub c_check: f64,
    /// `C(0)` with the `alpha` rule halved.
    pub c0_half_alpha: f64,
    pub c0_refined: f64,
    pub g_probes: Vec<GProbe>,
    pub c_probes: Vec<CProbe>,
    pub g_curve: TheoryCurve,
    pub c_curve: TheoryCurve,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// `G` at the probes by both routes plus the refined value.
pub fn g_probes(spec: &KernelSpec, alpha: f64) -> Result<Vec<GProbe>, HarnessError> {
    let refined = spec.with_quadrature(spec.quadrature.doubled());
    G_PROBES
        .iter()
        .map(|&q| {
            Ok(GProbe {
                q,
                direct: g_kernel(spec.x0, alpha, q, spec)?,
                convolution: g_kernel_by_convolution(spec.x0, alpha, q, spec)?,
                refined: g_kernel(spec.x0, alpha, q, &refined)?,
            })
        })
        .collect()
}

/// Worst relative change of `G` at the probes under quadrature doubling.
pub fn g_doubling_error(spec: &KernelSpec, alpha: f64) -> Result<f64, HarnessError> {
    Ok(g_probes(spec, alpha)?.iter().map(|p| rel(p.direct, p.refined)).fold(0.0, f64::max))
}

pub fn run_theory(cfg: &ExperimentConfig) -> Result<TheoryReport, HarnessError> {
    cfg.validate()?;
    let spec = cfg.kernel_spec()?;
    let sigma = sigma_on_curves(cfg);
    let alpha = cfg.coarse_grid()?.alpha(cfg.impulse_index.0);
    let opts = cfg.covariance;

    let c0 = variance_at(&spec, &sigma, &opts)?;
    let c_check = covariance(cfg.x_check, &spec, &sigma, &opts)?;
    let half = CovarianceOptions { n_alpha: opts.n_alpha / 2, ..opts };
    let c0_half_alpha = variance_at(&spec, &sigma, &half)?;

    // the cross-check and the doubling run on a lighter alpha rule, which
    // leaves their differences untouched
    let light = CovarianceOptions { n_alpha: 500, ..opts };
    let c0_light = variance_at(&spec, &sigma, &light)?;
    let c0_refined = match converged(&spec, 1e-6, |s| variance_at(s, &sigma, &light)) {
        Ok(v) | Err(crate::theory::TheoryError::NotConverged { refined: v, .. }) => v,
        Err(e) => return Err(e.into()),
    };
    let offsets: Vec<Point2> = C_PROBES.iter().map(|&s| s * cfg.x_check).collect();
    let via_corr = covariance_via_correlation(&offsets, &spec, &sigma, &light)?;
    let mut c_probes = Vec::with_capacity(offsets.len());
    for (x, corr) in offsets.iter().zip(via_corr) {
        c_probes.push(CProbe { offset: *x, spectral: covariance(*x, &spec, &sigma, &light)?, correlation: corr });
    }
    let gp = g_probes(&spec, alpha)?;

    let c_agree = c_probes.iter().map(|p| rel(p.correlation, p.spectral)).fold(0.0, f64::max);
    let g_agree = gp.iter().map(|p| rel(p.convolution, p.direct)).fold(0.0, f64::max);
    let g_double = gp.iter().map(|p| rel(p.direct, p.refined)).fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("covariance_routes_agree", c_agree, 1e-4),
        Check::at_most("g_routes_agree", g_agree, 1e-6),
        Check::at_most("g_quadrature_doubling", g_double, 1e-6),
        Check::at_most("c0_quadrature_doubling", rel(c0_light, c0_refined), 1e-6),
        Check::at_most("c0_alpha_halving", rel(c0_half_alpha, c0), 1e-4),
    ];

    let q: Vec<f64> = (0..=400).map(|k| -10.0 + 0.05 * k as f64).collect();
    let profile = FrequencyProfile::new(&spec, spec.x0, alpha, 10.0)?;
    let g_curve = TheoryCurve::new(CurveKind::GVsQ, q.clone(), q.iter().map(|&q| profile.eval(q)).collect())?;
    let s: Vec<f64> = (0..=60).map(|k| 0.05 * k as f64).collect();
    let c_values = s.iter().map(|&s| covariance(s * cfg.x_check, &spec, &sigma, &opts)).collect::<Result<Vec<_>, _>>()?;
    let c_curve = TheoryCurve::new(CurveKind::CVsOffset, s, c_values)?;

    let pass = all_pass(&checks);
    Ok(TheoryReport {
        alpha,
        mu: spec.mu,
        c0,
        c_check,
        c0_half_alpha,
        c0_refined,
        g_probes: gp,
        c_probes,
        g_curve,
        c_curve,
        checks,
        pass,
    })
}
