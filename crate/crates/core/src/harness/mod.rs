//! Experiment orchestration: the impulse response, the Monte Carlo noise
//! statistics, the theory tables and the self test, with their reports and
//! file exports.

pub mod config;
pub mod impulse;
pub mod io;
pub mod montecarlo;
pub mod selftest;
pub mod stats;
pub mod theory_run;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::DataError;
use crate::operators::OperatorError;
use crate::solver::{SolveReport, SolverError, SolverMethod, StopReason};
use crate::theory::{TheoryCurve, TheoryError};

pub use config::{Bands, Domain, ExperimentConfig, GridSize, McStrategy, Mode, Profile, SelftestOptions};
pub use impulse::{run_impulse, ImpulseReport};
pub use montecarlo::{run_montecarlo, MonteCarloOutcome};
pub use selftest::{run_selftest, SelftestReport};
pub use stats::{compare_theory, Check, StatsReport};
pub use theory_run::{run_theory, TheoryReport};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("statistics: {0}")]
    Stats(String),
    #[error("too few trials for the chi-square binning: {bins} bins, need {needed}")]
    InsufficientTrials { bins: usize, needed: usize },
    #[error("probe point ({x1}, {x2}) is outside the reconstruction grid")]
    ProbeOutside { x1: f64, x2: f64 },
    #[error("format: {0}")]
    Format(String),
}

/// Compact record of one solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub label: String,
    pub method: SolverMethod,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub monotone: bool,
    pub final_psi: f64,
    pub final_rel_residual: f64,
    pub step_size: Option<f64>,
    pub spectral_estimate: Option<f64>,
}

impl SolveSummary {
    pub fn new(label: &str, r: &SolveReport) -> Self {
        Self {
            label: label.into(),
            method: r.method,
            iterations: r.iterations,
            stop_reason: r.stop_reason,
            monotone: r.is_monotone(),
            final_psi: r.final_psi,
            final_rel_residual: r.final_rel_residual,
            step_size: r.step_size,
            spectral_estimate: r.spectral_estimate,
        }
    }
}

/// Mode-specific result.
#[derive(Debug, Clone)]
pub enum Outcome {
    Impulse(Box<ImpulseReport>),
    Montecarlo(Box<MonteCarloOutcome>),
    Theory(Box<TheoryReport>),
    Selftest(Box<SelftestReport>),
}

impl Outcome {
    pub fn checks(&self) -> &[Check] {
        match self {
            Outcome::Impulse(r) => &r.checks,
            Outcome::Montecarlo(r) => &r.comparison.checks,
            Outcome::Theory(r) => &r.checks,
            Outcome::Selftest(r) => &r.checks,
        }
    }

    fn to_json(&self) -> Result<serde_json::Value, HarnessError> {
        Ok(match self {
            Outcome::Impulse(r) => serde_json::to_value(r)?,
            Outcome::Montecarlo(r) => serde_json::to_value(r)?,
            Outcome::Theory(r) => serde_json::to_value(r)?,
            Outcome::Selftest(r) => serde_json::to_value(r)?,
        })
    }
}

/// Wall-clock data, kept apart so the rest of the report is reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub started_unix_s: u64,
    pub elapsed_s: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub profile: Profile,
    pub seed: u64,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
    pub timing: Timing,
}

impl RunReport {
    /// The report without its timing field, as canonical JSON.
    pub fn reproducible_json(&self) -> Result<String, HarnessError> {
        let mut v = serde_json::to_value(self)?;
        if let Some(obj) = v.as_object_mut() {
            obj.remove("timing");
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }
}

/// Runs the configured mode.
pub fn run(cfg: &ExperimentConfig) -> Result<(RunReport, Outcome), HarnessError> {
    cfg.validate()?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let outcome = match cfg.mode {
        Mode::Impulse => Outcome::Impulse(Box::new(run_impulse(cfg)?)),
        Mode::Montecarlo => Outcome::Montecarlo(Box::new(run_montecarlo(cfg)?)),
        Mode::Theory => Outcome::Theory(Box::new(run_theory(cfg)?)),
        Mode::Selftest => Outcome::Selftest(Box::new(run_selftest(cfg)?)),
    };
    let checks = outcome.checks().to_vec();
    let report = RunReport {
        mode: cfg.mode,
        profile: cfg.profile,
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        pass: stats::all_pass(&checks),
        checks,
        result: outcome.to_json()?,
        timing: Timing { started_unix_s: started, elapsed_s: clock.elapsed().as_secs_f64() },
    };
    Ok((report, outcome))
}

fn write_curve(dir: &Path, name: &str, curve: &TheoryCurve, out: &mut Vec<PathBuf>) -> Result<(), HarnessError> {
    let path = dir.join(name);
    fs::write(&path, curve.to_csv())?;
    out.push(path);
    Ok(())
}

/// Writes `report.json` and the mode's CSV and raw exports into `dir`.
pub fn write_artifacts(dir: &Path, report: &RunReport, outcome: &Outcome) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(report)?)?;
    written.push(path);
    match outcome {
        Outcome::Impulse(r) => {
            let fields = [("recon", r.recon.clone()), ("theory", r.theory.clone()), ("difference", r.difference())];
            for (name, img) in fields {
                if let Some(img) = img {
                    let raw = dir.join(format!("{name}.f64"));
                    io::write_image_raw(&raw, &img)?;
                    let csv = dir.join(format!("{name}.csv"));
                    fs::write(&csv, io::image_csv(&img))?;
                    written.extend([raw, csv]);
                }
            }
            if let Some(c) = &r.cross_section {
                let diff: Vec<f64> = c.recon.iter().zip(&c.theory).map(|(a, b)| a - b).collect();
                let text = io::columns_csv(
                    &["s", "x1", "x2", "recon", "theory", "difference"],
                    &[&c.s, &c.x1, &c.x2, &c.recon, &c.theory, &diff],
                )?;
                let path = dir.join("cross_section.csv");
                fs::write(&path, text)?;
                written.push(path);
            }
        }
        Outcome::Montecarlo(r) => {
            let (a, b) = &r.samples;
            let idx: Vec<f64> = (0..a.len()).map(|i| i as f64).collect();
            let path = dir.join("samples.csv");
            fs::write(&path, io::columns_csv(&["trial", "n_rec_x0", "n_rec_x1"], &[&idx, a, b])?)?;
            written.push(path);
            for (name, h) in [("histogram_x0.csv", &r.stats.histogram_x0), ("histogram_x1.csv", &r.stats.histogram_x1)] {
                let centers = h.centers();
                let counts: Vec<f64> = h.counts.iter().map(|&c| c as f64).collect();
                let path = dir.join(name);
                fs::write(&path, io::columns_csv(&["center", "count"], &[&centers, &counts])?)?;
                written.push(path);
            }
            write_curve(dir, "predicted_pdf.csv", &r.stats.predicted_pdf, &mut written)?;
        }
        Outcome::Theory(r) => {
            write_curve(dir, "g_vs_q.csv", &r.g_curve, &mut written)?;
            write_curve(dir, "c_vs_offset.csv", &r.c_curve, &mut written)?;
        }
        Outcome::Selftest(_) => {}
    }
    Ok(written)
}
