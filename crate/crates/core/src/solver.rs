//! Tikhonov functional on the reconstruction raster and its minimizers.
//!
//! The functional is
//! `Psi(f) = ||R f - g||^2 + kappa eps^3 ||grad f||^2 - <s, f>`
//! over images with a zero boundary ring. The optional linear source `s`
//! (zero for ordinary reconstructions) lets the same machinery solve
//! `H z = s` with `H = 2 (R* R + kappa eps^3 (-Delta_h))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Sinogram;
use crate::operators::{grad_norm_sq, neg_laplacian, Image, OperatorError, Projector};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("data or image grid does not match the projector")]
    GridMismatch,
    #[error("invalid solver config: {0}")]
    InvalidConfig(String),
    #[error("power iteration did not grow; the Hessian looks like zero")]
    ZeroOperator,
}

pub type Result<T> = std::result::Result<T, SolverError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMethod {
    /// Fixed-step gradient descent, `tau = step_safety / L`.
    GradientDescent,
    /// Conjugate gradients on the normal equations.
    ConjugateGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub kappa: f64,
    /// Native data step; enters the regularizer as `kappa * eps^3`.
    pub eps: f64,
    pub tol_sup: f64,
    pub tol_obj_rel: f64,
    pub stop_count: usize,
    pub max_iters: usize,
    pub step_safety: f64,
    pub method: SolverMethod,
    /// Conjugate gradients also stop once `||H f - b|| <= cg_rel_residual ||b||`.
    pub cg_rel_residual: f64,
    pub power_max_iters: usize,
    pub power_rel_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kappa: 0.5,
            eps: 0.023256,
            tol_sup: 1e-4,
            tol_obj_rel: 1e-6,
            stop_count: 3,
            max_iters: 5000,
            step_safety: 0.9,
            method: SolverMethod::GradientDescent,
            cg_rel_residual: 1e-7,
            power_max_iters: 50,
            power_rel_tol: 1e-3,
        }
    }
}

impl SolverConfig {
    pub fn with_eps(eps: f64) -> Self {
        Self { eps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad("kappa must be positive");
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad("eps must be positive");
        }
        if !(self.tol_sup > 0.0 && self.tol_obj_rel > 0.0 && self.cg_rel_residual > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.stop_count == 0 || self.max_iters == 0 || self.power_max_iters == 0 {
            return bad("counts must be at least 1");
        }
        if !(self.step_safety > 0.0 && self.step_safety.is_finite()) {
            return bad("step_safety must be positive");
        }
        Ok(())
    }

    /// Weight `kappa * eps^3` of the gradient penalty.
    pub fn reg_weight(&self) -> f64 {
        self.kappa * self.eps.powi(3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    SupChange,
    Objective,
    Residual,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: SolverMethod,
    pub iterations: usize,
    pub stop_reason: StopReason,
    pub step_size: Option<f64>,
    pub spectral_estimate: Option<f64>,
    pub final_psi: f64,
    pub final_rel_residual: f64,
    pub psi_history: Vec<f64>,
}

impl SolveReport {
    pub fn is_monotone(&self) -> bool {
        self.psi_history
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(f64::MIN_POSITIVE))
    }

    /// Copy with the history thinned to at most `keep` entries (first and last kept).
    pub fn truncated(&self, keep: usize) -> SolveReport {
        let mut r = self.clone();
        let n = r.psi_history.len();
        if keep >= 2 && n > keep {
            let stride = (n - 1) as f64 / (keep - 1) as f64;
            r.psi_history = (0..keep).map(|i| self.psi_history[(i as f64 * stride).round() as usize]).collect();
        }
        r
    }
}

/// The discrete functional bound to one projector.
pub struct Tikhonov<'a> {
    proj: &'a Projector,
    reg: f64,
}

impl<'a> Tikhonov<'a> {
    pub fn new(proj: &'a Projector, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { proj, reg: cfg.reg_weight() })
    }

    pub fn projector(&self) -> &Projector {
        self.proj
    }

    fn check_image(&self, f: &Image) -> Result<()> {
        if f.grid != *self.proj.image_grid() {
            return Err(SolverError::GridMismatch);
        }
        Ok(())
    }

    fn check_data(&self, g: &Sinogram) -> Result<()> {
        if !g.grid.same_as(self.proj.data_grid()) {
            return Err(SolverError::GridMismatch);
        }
        Ok(())
    }

    /// `Psi(f)` for data `g`.
    pub fn objective(&self, f: &Image, g: &Sinogram) -> Result<f64> {
        self.check_image(f)?;
        self.check_data(g)?;
        let mut r = self.proj.forward(f)?;
        r.axpy(-1.0, g);
        Ok(self.psi_from_residual(f, &r, None))
    }

    fn psi_from_residual(&self, f: &Image, resid: &Sinogram, source: Option<&Image>) -> f64 {
        let mut psi = resid.norm_sq() + self.reg * grad_norm_sq(f);
        if let Some(s) = source {
            psi -= s.dot(f);
        }
        psi
    }

    /// Residual `R f - g` and `2 R*(R f - g) + 2 kappa eps^3 (-Delta_h f) - s`
    /// with the ring zeroed.
    fn residual_and_gradient(
        &self,
        f: &Image,
        g: Option<&Sinogram>,
        source: Option<&Image>,
    ) -> Result<(Sinogram, Image)> {
        let (resid, mut grad) = self.proj.normal_residual(f, g)?;
        grad.scale(2.0);
        grad.axpy(2.0 * self.reg, &neg_laplacian(f));
        if let Some(s) = source {
            grad.axpy(-1.0, s);
        }
        grad.zero_boundary();
        Ok((resid, grad))
    }

    /// Exact gradient of [`Self::objective`] in the pixel-weighted inner product.
    pub fn gradient(&self, f: &Image, g: &Sinogram) -> Result<Image> {
        self.check_image(f)?;
        self.check_data(g)?;
        Ok(self.residual_and_gradient(f, Some(g), None)?.1)
    }

    /// `H v` with `H = 2 (R* R + kappa eps^3 (-Delta_h))` restricted to the interior.
    pub fn hessian(&self, v: &Image) -> Result<Image> {
        self.check_image(v)?;
        Ok(self.residual_and_gradient(v, None, None)?.1)
    }

    /// Largest Hessian eigenvalue by power iteration and the fixed step.
    pub fn estimate_step(&self, cfg: &SolverConfig) -> Result<(f64, f64)> {
        let grid = *self.proj.image_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut v = Image::from_fn(grid, |_| rng.random::<f64>() - 0.5);
        v.zero_boundary();
        let norm = v.dot(&v).sqrt();
        if norm == 0.0 {
            return Err(SolverError::ZeroOperator);
        }
        v.scale(1.0 / norm);
        let mut lambda = 0.0;
        for it in 0..cfg.power_max_iters {
            let hv = self.hessian(&v)?;
            let next = v.dot(&hv);
            let hn = hv.dot(&hv).sqrt();
            if !(hn > 0.0) || !next.is_finite() {
                return Err(SolverError::ZeroOperator);
            }
            v = hv;
            v.scale(1.0 / hn);
            let done = it > 0 && (next - lambda).abs() < cfg.power_rel_tol * next.abs();
            lambda = next;
            if done {
                break;
            }
        }
        if !(lambda > 0.0) {
            return Err(SolverError::ZeroOperator);
        }
        Ok((cfg.step_safety / lambda, lambda))
    }

    /// Minimizes `Psi` for data `g`, starting from `f = 0`.
    pub fn solve(&self, g: &Sinogram, cfg: &SolverConfig) -> Result<(Image, SolveReport)> {
        self.check_data(g)?;
        self.minimize(Some(g), None, cfg)
    }

    /// Solves `H z = s` (the minimizer of `||R z||^2 + kappa eps^3 ||grad z||^2 - <s, z>`).
    pub fn solve_source(&self, s: &Image, cfg: &SolverConfig) -> Result<(Image, SolveReport)> {
        self.check_image(s)?;
        let mut s = s.clone();
        s.zero_boundary();
        self.minimize(None, Some(&s), cfg)
    }

    fn minimize(&self, g: Option<&Sinogram>, s: Option<&Image>, cfg: &SolverConfig) -> Result<(Image, SolveReport)> {
        cfg.validate()?;
        match cfg.method {
            SolverMethod::GradientDescent => self.descend(g, s, cfg),
            SolverMethod::ConjugateGradient => self.conjugate(g, s, cfg),
        }
    }

    /// `b = 2 R* g + s`, the right-hand side of the normal equations.
    fn rhs(&self, g: Option<&Sinogram>, s: Option<&Image>) -> Result<Image> {
        let mut b = match g {
            Some(g) => {
                let mut b = self.proj.back(g)?;
                b.scale(2.0);
                b
            }
            None => Image::zeros(*self.proj.image_grid()),
        };
        if let Some(s) = s {
            b.axpy(1.0, s);
        }
        b.zero_boundary();
        Ok(b)
    }

    fn residual(&self, rf: &Sinogram, g: Option<&Sinogram>) -> Sinogram {
        let mut r = rf.clone();
        if let Some(g) = g {
            r.axpy(-1.0, g);
        }
        r
    }

    fn descend(&self, g: Option<&Sinogram>, s: Option<&Image>, cfg: &SolverConfig) -> Result<(Image, SolveReport)> {
        let (tau, l_est) = self.estimate_step(cfg)?;
        let b_norm = self.rhs(g, s)?.norm();
        let grid = *self.proj.image_grid();
        let mut f = Image::zeros(grid);
        let mut counters = Counters::default();
        let mut history = Vec::new();
        let mut psi0 = 0.0;
        let mut rel_res = 1.0;
        let mut reason = StopReason::MaxIters;
        let mut iterations = 0;
        for k in 0..cfg.max_iters {
            let (resid, grad) = self.residual_and_gradient(&f, g, s)?;
            let psi = self.psi_from_residual(&f, &resid, s);
            if k == 0 {
                psi0 = psi;
            }
            history.push(psi);
            rel_res = if b_norm > 0.0 { grad.norm() / b_norm } else { 0.0 };
            let sup = tau * grad.max_abs();
            f.axpy(-tau, &grad);
            iterations = k + 1;
            if let Some(r) = counters.record(sup, psi, psi0, cfg) {
                reason = r;
                break;
            }
        }
        let mut rf = self.proj.forward(&f)?;
        if let Some(g) = g {
            rf.axpy(-1.0, g);
        }
        let psi = self.psi_from_residual(&f, &rf, s);
        history.push(psi);
        let report = SolveReport {
            method: SolverMethod::GradientDescent,
            iterations,
            stop_reason: reason,
            step_size: Some(tau),
            spectral_estimate: Some(l_est),
            final_psi: psi,
            final_rel_residual: rel_res,
            psi_history: history,
        };
        Ok((f, report))
    }

    fn conjugate(&self, g: Option<&Sinogram>, s: Option<&Image>, cfg: &SolverConfig) -> Result<(Image, SolveReport)> {
        let grid = *self.proj.image_grid();
        let mut r = self.rhs(g, s)?;
        let b_norm = r.norm();
        let mut f = Image::zeros(grid);
        let mut rf = Sinogram::zeros(*self.proj.data_grid());
        let mut p = r.clone();
        let mut rr = r.dot(&r);
        let mut counters = Counters::default();
        let mut history = Vec::new();
        let mut psi0 = 0.0;
        let mut reason = StopReason::MaxIters;
        let mut iterations = 0;
        for k in 0..cfg.max_iters {
            let psi = self.psi_from_residual(&f, &self.residual(&rf, g), s);
            if k == 0 {
                psi0 = psi;
            }
            history.push(psi);
            if rr.sqrt() <= cfg.cg_rel_residual * b_norm || rr == 0.0 {
                reason = StopReason::Residual;
                break;
            }
            let (rp, hp) = self.residual_and_gradient(&p, None, None)?;
            let php = p.dot(&hp);
            if !(php > 0.0) {
                reason = StopReason::Residual;
                break;
            }
            let a = rr / php;
            f.axpy(a, &p);
            rf.axpy(a, &rp);
            r.axpy(-a, &hp);
            let sup = a * p.max_abs();
            iterations = k + 1;
            let rr_new = r.dot(&r);
            if let Some(reason_k) = counters.record(sup, psi, psi0, cfg) {
                reason = reason_k;
                rr = rr_new;
                break;
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for (pv, rv) in p.values.iter_mut().zip(&r.values) {
                *pv = rv + beta * *pv;
            }
        }
        let psi = self.psi_from_residual(&f, &self.residual(&rf, g), s);
        history.push(psi);
        let report = SolveReport {
            method: SolverMethod::ConjugateGradient,
            iterations,
            stop_reason: reason,
            step_size: None,
            spectral_estimate: None,
            final_psi: psi,
            final_rel_residual: if b_norm > 0.0 { rr.sqrt() / b_norm } else { 0.0 },
            psi_history: history,
        };
        Ok((f, report))
    }
}

/// Separate occurrence counters for the two stopping criteria.
#[derive(Default)]
struct Counters {
    sup: usize,
    obj: usize,
}

impl Counters {
    fn record(&mut self, sup_change: f64, psi: f64, psi0: f64, cfg: &SolverConfig) -> Option<StopReason> {
        if sup_change < cfg.tol_sup {
            self.sup += 1;
        }
        // relative objective test is meaningless without a positive reference
        if psi0 > 0.0 && psi <= cfg.tol_obj_rel * psi0 {
            self.obj += 1;
        }
        if self.sup >= cfg.stop_count {
            Some(StopReason::SupChange)
        } else if self.obj >= cfg.stop_count {
            Some(StopReason::Objective)
        } else {
            None
        }
    }
}
