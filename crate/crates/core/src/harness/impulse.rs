//! Response of the reconstruction to a single unit datum, against the
//! kernel `G` evaluated along the matching circle.

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::{all_pass, Check};
use super::{HarnessError, SolveSummary};
use crate::data::{keys_kernel, Interpolator, Sinogram};
use crate::geometry::Point2;
use crate::operators::{Image, ImageGrid, Projector, ProjectorSpec};
use crate::solver::Tikhonov;
use crate::theory::FrequencyProfile;

/// Step of the `G` table the theory field is interpolated from.
const TABLE_STEP: f64 = 1e-3;

/// `G(x0, alpha, .)` tabulated on `[0, q_max]`, read by linear interpolation.
struct KernelTable {
    values: Vec<f64>,
}

impl KernelTable {
    fn new(profile: &FrequencyProfile, q_max: f64) -> Self {
        let n = (q_max / TABLE_STEP).ceil() as usize + 2;
        Self { values: profile.eval_grid(TABLE_STEP, n) }
    }

    fn eval(&self, q: f64) -> f64 {
        let t = q.abs() / TABLE_STEP;
        let k = (t as usize).min(self.values.len() - 2);
        let f = t - k as f64;
        (1.0 - f) * self.values[k] + f * self.values[k + 1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSection {
    pub from: Point2,
    pub to: Point2,
    pub s: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub recon: Vec<f64>,
    pub theory: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseReport {
    pub grid: ImageGrid,
    pub alpha: f64,
    pub rho: f64,
    pub eps: f64,
    /// Largest deviation of the fine data from the separable Keys footprint.
    pub footprint_error: f64,
    /// Distance of the theory maximum from the circle `|x - R alpha_vec| = rho`.
    pub peak_offset: f64,
    pub interior_sup_error: f64,
    pub theory_range: f64,
    pub relative_error: f64,
    pub solve: SolveSummary,
    pub checks: Vec<Check>,
    pub pass: bool,
    #[serde(skip)]
    pub recon: Option<Image>,
    #[serde(skip)]
    pub theory: Option<Image>,
    #[serde(skip)]
    pub cross_section: Option<CrossSection>,
}

impl ImpulseReport {
    pub fn difference(&self) -> Option<Image> {
        let (r, t) = (self.recon.as_ref()?, self.theory.as_ref()?);
        let mut d = r.clone();
        d.axpy(-1.0, t);
        Some(d)
    }
}

/// Theory field `G(x0, alpha, (|x - R alpha_vec| - rho) / eps)` on `grid`.
pub fn theory_field(cfg: &ExperimentConfig, grid: ImageGrid, alpha: f64, rho: f64) -> Result<Image, HarnessError> {
    let spec = cfg.kernel_spec()?;
    let eps = cfg.eps();
    let centre = cfg.radius * Point2::unit(alpha);
    let q_of = |x: Point2| ((x - centre).norm() - rho) / eps;
    let mut q_max = 0.0f64;
    for k in 0..grid.n {
        for i in 0..grid.n {
            q_max = q_max.max(q_of(grid.point(i, k)).abs());
        }
    }
    let q_max = q_max + 1.0;
    let profile = FrequencyProfile::new(&spec, cfg.x0, alpha, q_max)?;
    let table = KernelTable::new(&profile, q_max);
    Ok(Image::from_fn(grid, |x| table.eval(q_of(x))))
}

pub fn run_impulse(cfg: &ExperimentConfig) -> Result<ImpulseReport, HarnessError> {
    cfg.validate()?;
    let coarse = cfg.coarse_grid()?;
    let fine = cfg.fine_grid()?;
    let grid = cfg.image_grid()?;
    let (j1, j2) = cfg.impulse_index;
    let (alpha, rho) = (coarse.alpha(j1), coarse.rho(j2));
    let eps = cfg.eps();

    let mut eta = Sinogram::zeros(coarse);
    eta.set(j1, j2, 1.0);
    let g = Interpolator::new(coarse, fine)?.apply(&eta)?;
    let footprint_error = footprint_deviation(&g, alpha, rho, coarse.delta_alpha(), coarse.delta_rho());

    let proj = Projector::new(ProjectorSpec::new(fine, cfg.radius), grid)?;
    let tk = Tikhonov::new(&proj, &cfg.solver)?;
    let (recon, report) = tk.solve(&g, &cfg.solver)?;
    let solve = SolveSummary::new("impulse", &report);

    let theory = theory_field(cfg, grid, alpha, rho)?;
    let centre = cfg.radius * Point2::unit(alpha);
    let (imax, _) = theory
        .values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    let peak = grid.point(imax % grid.n, imax / grid.n);
    let peak_offset = ((peak - centre).norm() - rho).abs();

    let (lo, hi) = theory.values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let theory_range = hi - lo;
    let interior_sup_error = interior_sup(&recon, &theory, 0.1);
    let relative_error = interior_sup_error / theory_range;

    let (from, to) = cfg.cross_section.unwrap_or((
        Point2::new(grid.x_lo, cfg.x0.x2),
        Point2::new(grid.x_hi, cfg.x0.x2),
    ));
    let cross_section = cross_section(&recon, &theory, from, to, grid.n)?;

    let checks = vec![
        Check::at_most("footprint", footprint_error, 1e-12),
        Check::at_most("theory_peak_on_circle", peak_offset, grid.pixel()),
        Check::flag("psi_monotone", report.is_monotone(), ""),
        Check::at_most("interior_relative_error", relative_error, cfg.bands.impulse_rel),
    ];
    let pass = all_pass(&checks);
    Ok(ImpulseReport {
        grid,
        alpha,
        rho,
        eps,
        footprint_error,
        peak_offset,
        interior_sup_error,
        theory_range,
        relative_error,
        solve,
        checks,
        pass,
        recon: Some(recon),
        theory: Some(theory),
        cross_section: Some(cross_section),
    })
}

/// `max |fine - keys((alpha - alpha0)/d_alpha) keys((rho - rho0)/d_rho)|`.
fn footprint_deviation(g: &Sinogram, alpha0: f64, rho0: f64, da: f64, dr: f64) -> f64 {
    let grid = g.grid;
    let mut worst = 0.0f64;
    for i1 in 0..grid.n_alpha {
        let mut d = grid.alpha(i1) - alpha0;
        d -= std::f64::consts::TAU * (d / std::f64::consts::TAU).round();
        let ka = keys_kernel(d / da);
        for i2 in 0..grid.n_rho {
            let expect = ka * keys_kernel((grid.rho(i2) - rho0) / dr);
            worst = worst.max((g.get(i1, i2) - expect).abs());
        }
    }
    worst
}

/// Sup of `|a - b|` over the subrectangle left after trimming `margin` of
/// the width from every side.
pub fn interior_sup(a: &Image, b: &Image, margin: f64) -> f64 {
    let g = a.grid;
    let (wx, wy) = (g.x_hi - g.x_lo, g.y_hi - g.y_lo);
    let (x_lo, x_hi) = (g.x_lo + margin * wx, g.x_hi - margin * wx);
    let (y_lo, y_hi) = (g.y_lo + margin * wy, g.y_hi - margin * wy);
    let tol = 1e-9 * g.pixel();
    let mut worst = 0.0f64;
    for k in 0..g.n {
        for i in 0..g.n {
            let x = g.point(i, k);
            if x.x1 >= x_lo - tol && x.x1 <= x_hi + tol && x.x2 >= y_lo - tol && x.x2 <= y_hi + tol {
                worst = worst.max((a.get(i, k) - b.get(i, k)).abs());
            }
        }
    }
    worst
}

fn cross_section(recon: &Image, theory: &Image, from: Point2, to: Point2, n: usize) -> Result<CrossSection, HarnessError> {
    let len = (to - from).norm();
    let mut c = CrossSection { from, to, s: vec![], x1: vec![], x2: vec![], recon: vec![], theory: vec![] };
    for k in 0..n {
        let f = k as f64 / (n - 1) as f64;
        let x = from + f * (to - from);
        let rv = recon.sample(x).ok_or(HarnessError::ProbeOutside { x1: x.x1, x2: x.x2 })?;
        let tv = theory.sample(x).ok_or(HarnessError::ProbeOutside { x1: x.x1, x2: x.x2 })?;
        c.s.push(f * len);
        c.x1.push(x.x1);
        c.x2.push(x.x2);
        c.recon.push(rv);
        c.theory.push(tv);
    }
    Ok(c)
}
