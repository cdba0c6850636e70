use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::data::{DataGrid, DiskPhantom, NoiseSpec};
use crate::geometry::{GrtModel, Point2};
use crate::operators::ImageGrid;
use crate::solver::{SolverConfig, SolverMethod};
use crate::theory::{CovarianceOptions, KernelSpec, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Impulse,
    Montecarlo,
    Theory,
    Selftest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Paper,
    #[default]
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSize {
    pub n_alpha: usize,
    pub n_rho: usize,
}

impl GridSize {
    pub const fn new(n_alpha: usize, n_rho: usize) -> Self {
        Self { n_alpha, n_rho }
    }
}

/// Axis-aligned square reconstruction domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Domain {
    pub fn square(half: f64) -> Self {
        Self { x_lo: -half, x_hi: half, y_lo: -half, y_hi: half }
    }

    /// The small window around `x0` used for the impulse response.
    pub fn impulse_window() -> Self {
        Self { x_lo: 1.0, x_hi: 1.4, y_lo: 0.5, y_hi: 0.9 }
    }

    pub fn contains(&self, x: Point2) -> bool {
        x.x1 > self.x_lo && x.x1 < self.x_hi && x.x2 > self.y_lo && x.x2 < self.y_hi
    }
}

/// How the Monte Carlo samples of `N_rec` are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum McStrategy {
    /// Two adjoint solves give the linear functionals `eta -> N_rec(x_p)`;
    /// every trial is then a dot product with the thresholded noise.
    #[default]
    Representer,
    /// One reconstruction per trial minus the cached noise-free one.
    Direct,
}

/// Acceptance bands. `None` disables a check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    /// Interior sup error over the theory field's range.
    pub impulse_rel: f64,
    /// Absolute window for the sample variances, if set.
    pub var_abs: Option<(f64, f64)>,
    /// Relative band around the predicted variance, if set.
    pub var_rel: Option<f64>,
    /// Absolute half-width around the predicted covariance, if set.
    pub cov_abs: Option<f64>,
    pub cov_rel: Option<f64>,
    /// Significance level of the chi-square test.
    pub chi2_level: f64,
}

impl Bands {
    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Paper => Self {
                impulse_rel: 0.15,
                var_abs: Some((0.034, 0.052)),
                var_rel: None,
                cov_abs: Some(0.006),
                cov_rel: None,
                chi2_level: 0.01,
            },
            Profile::Desk => Self {
                impulse_rel: 0.25,
                var_abs: None,
                var_rel: Some(0.20),
                cov_abs: None,
                cov_rel: Some(0.25),
                chi2_level: 0.01,
            },
        }
    }
}

/// Knobs of the self test, including deliberate faults for negative controls.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SelftestOptions {
    /// Scales the back-projection by `1 + 1e-6` before the adjoint check.
    pub perturb_adjoint: bool,
    /// Cuts the theory quadrature to a quarter of the panels and nodes.
    pub reduced_quadrature: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub profile: Profile,
    pub radius: f64,
    pub r_rec: f64,
    pub coarse: GridSize,
    pub fine: GridSize,
    pub recon_n: usize,
    pub domain: Domain,
    pub kappa: f64,
    pub trials: usize,
    pub seed: u64,
    pub x0: Point2,
    pub x_check: Point2,
    pub phantom: DiskPhantom,
    pub noise: NoiseSpec,
    /// Coarse node `(j1, j2)` carrying the unit impulse.
    pub impulse_index: (usize, usize),
    /// Endpoints of the exported cross-section; defaults to the horizontal
    /// line through `x0` across the domain.
    pub cross_section: Option<(Point2, Point2)>,
    pub strategy: McStrategy,
    pub solver: SolverConfig,
    pub quadrature: QuadratureSpec,
    pub covariance: CovarianceOptions,
    pub bands: Bands,
    pub selftest: SelftestOptions,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Fully populated defaults for a mode and profile.
    pub fn preset(mode: Mode, profile: Profile) -> Self {
        let paper = profile == Profile::Paper;
        let (coarse, fine, recon_n, domain, trials) = match mode {
            Mode::Impulse => {
                let fine = if paper { GridSize::new(2400, 3601) } else { GridSize::new(1200, 1801) };
                (GridSize::new(300, 451), fine, if paper { 801 } else { 201 }, Domain::impulse_window(), 0)
            }
            _ if paper => (GridSize::new(300, 451), GridSize::new(1200, 1801), 801, Domain::square(3.7), 1500),
            _ => (GridSize::new(150, 226), GridSize::new(600, 901), 201, Domain::square(3.7), 300),
        };
        // acceptance is judged on the converged minimizer, and plain descent
        // with the sup-change stop halts well short of it on these grids
        let solver = SolverConfig {
            method: SolverMethod::ConjugateGradient,
            cg_rel_residual: 1e-8,
            tol_sup: 1e-300,
            max_iters: 3000,
            ..SolverConfig::default()
        };
        let mut cfg = Self {
            mode,
            profile,
            radius: 10.0,
            r_rec: 3.7,
            coarse,
            fine,
            recon_n,
            domain,
            kappa: 0.5,
            trials,
            seed: 20240607,
            x0: Point2::new(1.2, 0.7),
            x_check: Point2::new(1.24, -1.77),
            phantom: DiskPhantom::default(),
            noise: NoiseSpec::default(),
            // same direction on the halved desk grid
            impulse_index: if coarse.n_alpha == 150 { (50, 114) } else { (100, 229) },
            cross_section: None,
            strategy: McStrategy::default(),
            solver,
            quadrature: QuadratureSpec::default(),
            covariance: CovarianceOptions::default(),
            bands: Bands::for_profile(profile),
            selftest: SelftestOptions::default(),
            out_dir: PathBuf::from("out"),
        };
        cfg.sync_derived();
        cfg
    }

    /// Copies values that must agree across sections (`kappa`, `eps`, the
    /// noise seed).
    pub fn sync_derived(&mut self) {
        self.solver.kappa = self.kappa;
        if let Ok(g) = self.coarse_grid() {
            self.solver.eps = g.eps();
        }
        self.noise.seed = self.seed;
    }

    /// Resolves a JSON document over the preset of its mode and profile.
    /// `mode` and `profile`, when given, win over the file.
    pub fn from_json(text: &str, mode: Option<Mode>, profile: Option<Profile>) -> Result<Self, HarnessError> {
        let user: Value = if text.trim().is_empty() { Value::Object(Default::default()) } else { serde_json::from_str(text)? };
        if !user.is_object() {
            return Err(HarnessError::Config("top level must be a JSON object".into()));
        }
        let mode = match mode {
            Some(m) => m,
            None => pick::<Mode>(&user, "mode")?.ok_or_else(|| HarnessError::Config("mode missing".into()))?,
        };
        let profile = match profile {
            Some(p) => p,
            None => pick::<Profile>(&user, "profile")?.unwrap_or_default(),
        };
        let mut base = serde_json::to_value(Self::preset(mode, profile))?;
        merge(&mut base, &user);
        base["mode"] = serde_json::to_value(mode)?;
        base["profile"] = serde_json::to_value(profile)?;
        let mut cfg: Self = serde_json::from_value(base)?;
        cfg.sync_derived();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if !(self.radius > 0.0 && self.r_rec > 0.0 && self.kappa > 0.0) {
            return bad("radius, r_rec and kappa must be positive".into());
        }
        self.coarse_grid()?;
        self.fine_grid()?;
        if !self.fine.n_alpha.is_multiple_of(self.coarse.n_alpha) || !(self.fine.n_rho - 1).is_multiple_of(self.coarse.n_rho - 1) {
            return bad("fine grid must refine the coarse grid by integer factors".into());
        }
        let grid = self.image_grid()?;
        if !self.domain.contains(self.x0) {
            return bad(format!("x0 {:?} outside the domain", self.x0));
        }
        if matches!(self.mode, Mode::Montecarlo) && !self.domain.contains(self.x1()) {
            return bad(format!("x1 {:?} outside the domain", self.x1()));
        }
        if grid.max_radius() >= self.radius {
            return bad("domain reaches the circle of centres".into());
        }
        let (j1, j2) = self.impulse_index;
        if j1 >= self.coarse.n_alpha || j2 >= self.coarse.n_rho {
            return bad(format!("impulse index {:?} outside the coarse grid", self.impulse_index));
        }
        if matches!(self.mode, Mode::Montecarlo) && self.trials < 2 {
            return bad("need at least two trials".into());
        }
        self.solver.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        self.kernel_spec()?;
        Ok(())
    }

    pub fn coarse_grid(&self) -> Result<DataGrid, HarnessError> {
        Ok(DataGrid::build(self.coarse.n_alpha, self.coarse.n_rho, self.radius, self.r_rec)?)
    }

    pub fn fine_grid(&self) -> Result<DataGrid, HarnessError> {
        Ok(DataGrid::build(self.fine.n_alpha, self.fine.n_rho, self.radius, self.r_rec)?)
    }

    pub fn image_grid(&self) -> Result<ImageGrid, HarnessError> {
        let d = self.domain;
        Ok(ImageGrid::new(d.x_lo, d.x_hi, d.y_lo, d.y_hi, self.recon_n)?)
    }

    /// Native scale of the coarse data.
    pub fn eps(&self) -> f64 {
        self.coarse_grid().map(|g| g.eps()).unwrap_or(f64::NAN)
    }

    /// Second probe point `x0 + eps x_check`.
    pub fn x1(&self) -> Point2 {
        self.x0 + self.eps() * self.x_check
    }

    pub fn model(&self) -> GrtModel {
        GrtModel::Circular { radius: self.radius }
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, HarnessError> {
        let mu = self.coarse_grid()?.mu();
        Ok(KernelSpec::new(self.model(), self.x0, self.kappa, mu)?.with_quadrature(self.quadrature))
    }

    /// SHA-256 of the canonical JSON of the resolved config.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn pick<T: serde::de::DeserializeOwned>(v: &Value, key: &str) -> Result<Option<T>, serde_json::Error> {
    v.get(key).cloned().map(serde_json::from_value).transpose()
}

/// Recursive object merge; non-object values in `over` replace `base`.
fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
