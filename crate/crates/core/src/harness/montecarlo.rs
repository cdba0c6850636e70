//! Monte Carlo noise statistics of the reconstruction at `x0` and
//! `x1 = x0 + eps x_check`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, McStrategy};
use super::stats::{compare_theory, normal_pdf_curve, standard_histogram, Comparison, SampleMoments, StatsReport};
use super::{HarnessError, SolveSummary};
use crate::data::{
    disk_data, noise::sample_noise_with, sigma_map, threshold_bound, thresholded_noise, DataGrid, Interpolator,
    Sinogram,
};
use crate::geometry::{DataPoint, Point2};
use crate::operators::{Image, Projector, ProjectorSpec};
use crate::solver::{StopReason, Tikhonov};
use crate::theory::{covariance, variance_at};

/// Shared state of one Monte Carlo configuration.
pub struct McSetup {
    pub cfg: ExperimentConfig,
    pub coarse: DataGrid,
    pub interp: Interpolator,
    pub proj: Projector,
    /// Noise-free coarse data.
    pub f_hat: Sinogram,
    pub c_bound: f64,
    pub sigma: Sinogram,
}

impl McSetup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        cfg.validate()?;
        let coarse = cfg.coarse_grid()?;
        let fine = cfg.fine_grid()?;
        let interp = Interpolator::new(coarse, fine)?;
        let proj = Projector::new(ProjectorSpec::new(fine, cfg.radius), cfg.image_grid()?)?;
        let f_hat = disk_data(&coarse, &cfg.phantom, cfg.radius);
        let c_bound = threshold_bound(&f_hat);
        let sigma = sigma_map(&coarse, &cfg.noise, &cfg.phantom, cfg.radius);
        Ok(Self { cfg: cfg.clone(), coarse, interp, proj, f_hat, c_bound, sigma })
    }

    /// Working noise `eta` of one trial.
    pub fn eta(&self, trial: u64) -> Result<Sinogram, HarnessError> {
        let nu = sample_noise_with(&self.sigma, &mut self.cfg.noise.stream(trial));
        Ok(thresholded_noise(&self.f_hat, &nu, self.c_bound)?)
    }

    pub fn probes(&self) -> [Point2; 2] {
        [self.cfg.x0, self.cfg.x1()]
    }

    /// Coarse-grid weights `v` with `N_rec(x) = sum_j v_j eta_j`.
    ///
    /// `N_rec(x) = <w_x / h^2, H^-1 2 R* I eta> = 2 <R z, I eta>` with
    /// `H z = w_x / h^2`, so `v = 2 d_alpha' d_rho' I^T R z`.
    pub fn representer(&self, x: Point2) -> Result<(Sinogram, SolveSummary), HarnessError> {
        let grid = *self.proj.image_grid();
        let (offs, w) = grid.bilinear_stencil(x).ok_or(HarnessError::ProbeOutside { x1: x.x1, x2: x.x2 })?;
        let h2 = grid.pixel() * grid.pixel();
        let mut src = Image::zeros(grid);
        for (o, w) in offs.iter().zip(w) {
            src.values[*o] += w / h2;
        }
        let tk = Tikhonov::new(&self.proj, &self.cfg.solver)?;
        let (z, report) = tk.solve_source(&src, &self.cfg.solver)?;
        let rz = self.proj.forward(&z)?;
        let mut v = self.interp.apply_transpose(&rz)?;
        v.scale(2.0 * self.proj.data_grid().cell_area());
        Ok((v, SolveSummary::new(&format!("representer ({:.4}, {:.4})", x.x1, x.x2), &report)))
    }

    /// Reconstruction from coarse data.
    pub fn reconstruct(&self, coarse: &Sinogram) -> Result<(Image, crate::solver::SolveReport), HarnessError> {
        let g = self.interp.apply(coarse)?;
        let tk = Tikhonov::new(&self.proj, &self.cfg.solver)?;
        Ok(tk.solve(&g, &self.cfg.solver)?)
    }
}

/// Probe values of one direct trial and its solve record.
type TrialValue = ((f64, f64), SolveSummary);

/// Monte Carlo run: samples, statistics and the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloOutcome {
    pub strategy: McStrategy,
    /// How `N_rec` is isolated from the reconstruction of the disk.
    pub noise_isolation: String,
    pub x0: Point2,
    pub x1: Point2,
    pub eps: f64,
    pub threshold_bound: f64,
    pub stats: StatsReport,
    pub comparison: Comparison,
    pub solves: Vec<SolveSummary>,
    #[serde(skip)]
    pub samples: (Vec<f64>, Vec<f64>),
}

/// Noise level along the curves through `x0`, as the theory needs it.
pub fn sigma_on_curves(cfg: &ExperimentConfig) -> impl Fn(f64, f64) -> f64 + Sync {
    let (noise, disk, radius) = (cfg.noise, cfg.phantom, cfg.radius);
    move |a, r| noise.sigma(a, r, disk.circle_meets(radius, DataPoint::new(a, r)))
}

/// Predicted `C(0)` and `C(x_check)`.
pub fn predictions(cfg: &ExperimentConfig) -> Result<(f64, f64), HarnessError> {
    let spec = cfg.kernel_spec()?;
    let sigma = sigma_on_curves(cfg);
    let c0 = variance_at(&spec, &sigma, &cfg.covariance)?;
    let c1 = covariance(cfg.x_check, &spec, &sigma, &cfg.covariance)?;
    Ok((c0, c1))
}

pub fn run_montecarlo(cfg: &ExperimentConfig) -> Result<MonteCarloOutcome, HarnessError> {
    let setup = McSetup::new(cfg)?;
    let (predicted_var, predicted_cov) = predictions(cfg)?;
    let trials = cfg.trials;
    let mut solves = Vec::new();
    let (samples, failed, discrete, isolation) = match cfg.strategy {
        McStrategy::Representer => {
            let mut vs = Vec::new();
            for x in setup.probes() {
                let (v, s) = setup.representer(x)?;
                solves.push(s);
                vs.push(v);
            }
            let values: Vec<Result<(f64, f64), HarnessError>> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let eta = setup.eta(t)?;
                    Ok((plain_dot(&vs[0], &eta), plain_dot(&vs[1], &eta)))
                })
                .collect();
            let pairs = values.into_iter().collect::<Result<Vec<_>, _>>()?;
            let da = setup.coarse.delta_alpha();
            let moment = |a: &Sinogram, b: &Sinogram| -> f64 {
                a.values.iter().zip(&b.values).zip(&setup.sigma.values).map(|((x, y), s)| x * y * s * s).sum::<f64>() * da
            };
            let dv = (moment(&vs[0], &vs[0]), moment(&vs[1], &vs[1]));
            let dc = moment(&vs[0], &vs[1]);
            (unzip(pairs), 0, Some((dv, dc)), "linear representer of eta (exact for the minimizer)".to_string())
        }
        McStrategy::Direct => {
            let (clean, clean_report) = setup.reconstruct(&setup.f_hat)?;
            solves.push(SolveSummary::new("noise-free", &clean_report));
            let [p0, p1] = setup.probes();
            let c0 = read(&clean, p0)?;
            let c1 = read(&clean, p1)?;
            let results: Vec<Result<Option<TrialValue>, HarnessError>> = (0..trials as u64)
                .into_par_iter()
                .map(|t| {
                    let mut g = setup.f_hat.clone();
                    g.axpy(1.0, &setup.eta(t)?);
                    match setup.reconstruct(&g) {
                        Ok((f, rep)) if rep.stop_reason != StopReason::MaxIters => {
                            let pair = (read(&f, p0)? - c0, read(&f, p1)? - c1);
                            Ok(Some((pair, SolveSummary::new(&format!("trial {t}"), &rep))))
                        }
                        _ => Ok(None),
                    }
                })
                .collect();
            let mut pairs = Vec::new();
            let mut failed = 0;
            for r in results {
                match r? {
                    Some((p, s)) => {
                        pairs.push(p);
                        solves.push(s);
                    }
                    None => failed += 1,
                }
            }
            (unzip(pairs), failed, None, "reconstruction of noisy data minus cached noise-free reconstruction".to_string())
        }
    };
    let sample = SampleMoments::from_pairs(&samples.0, &samples.1)?;
    // a silent noise model predicts zero variance; bin on a unit scale then
    let scale = if predicted_var > 0.0 { predicted_var } else { 1.0 };
    let histogram_x0 = standard_histogram(&samples.0, scale)?;
    let histogram_x1 = standard_histogram(&samples.1, scale)?;
    let predicted_pdf = normal_pdf_curve(&histogram_x0, scale)?;
    let stats = StatsReport {
        trials,
        failed_trials: failed,
        sample,
        predicted_var,
        predicted_cov,
        discrete_var: discrete.map(|d| d.0),
        discrete_cov: discrete.map(|d| d.1),
        histogram_x0,
        histogram_x1,
        predicted_pdf,
    };
    let comparison = compare_theory(&stats, &cfg.bands);
    Ok(MonteCarloOutcome {
        strategy: cfg.strategy,
        noise_isolation: isolation,
        x0: cfg.x0,
        x1: cfg.x1(),
        eps: cfg.eps(),
        threshold_bound: setup.c_bound,
        stats,
        comparison,
        solves,
        samples,
    })
}

fn plain_dot(a: &Sinogram, b: &Sinogram) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum()
}

fn unzip(pairs: Vec<(f64, f64)>) -> (Vec<f64>, Vec<f64>) {
    pairs.into_iter().unzip()
}

fn read(img: &Image, x: Point2) -> Result<f64, HarnessError> {
    img.sample(x).ok_or(HarnessError::ProbeOutside { x1: x.x1, x2: x.x2 })
}

