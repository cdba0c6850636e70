//! Closed-form predictions for the local noise kernel `G` and the
//! covariance `C` of the reconstruction, by deterministic quadrature.
//!
//! Every kernel is evaluated through the same per-direction quantities
//! (`Theta`, `Phi'_alpha`, chord distance `a`, `Q0`, weight), so both GRT
//! models share one code path.

mod covariance;
mod kernels;
pub mod quadrature;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, GrtModel, Point2};

pub use covariance::{
    covariance, covariance_via_correlation, gg_correlation, variance_at, CovarianceOptions, GgCorrelation,
};
pub use kernels::{g_kernel, g_kernel_by_convolution, k0_kernel, vartheta, vartheta_ft, FrequencyProfile};
pub use quadrature::{sine_integral, GaussLegendre, QuadratureSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid kernel spec: {0}")]
    InvalidSpec(String),
    #[error("quadrature not converged: {value} vs {refined} after refinement")]
    NotConverged { value: f64, refined: f64 },
}

pub type Result<T> = std::result::Result<T, TheoryError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub model: GrtModel,
    pub x0: Point2,
    pub kappa: f64,
    /// `delta_alpha / delta_rho` of the data grid.
    pub mu: f64,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
}

impl KernelSpec {
    pub fn new(model: GrtModel, x0: Point2, kappa: f64, mu: f64) -> Result<Self> {
        let spec = Self { model, x0, kappa, mu, quadrature: QuadratureSpec::default() };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_quadrature(mut self, q: QuadratureSpec) -> Self {
        self.quadrature = q;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(TheoryError::InvalidSpec(format!("kappa = {}", self.kappa)));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(TheoryError::InvalidSpec(format!("mu = {}", self.mu)));
        }
        let q = &self.quadrature;
        if !(q.lambda_max > 0.0 && q.panels > 0 && q.nodes_per_panel > 0 && q.tail_rel > 0.0) {
            return Err(TheoryError::InvalidSpec("quadrature parameters must be positive".into()));
        }
        self.model.phi(self.x0, 0.0)?;
        Ok(())
    }
}

/// Kind of a tabulated prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    GVsQ,
    CVsOffset,
    HistogramPdf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryCurve {
    pub kind: CurveKind,
    pub abscissae: Vec<f64>,
    pub values: Vec<f64>,
}

impl TheoryCurve {
    pub fn new(kind: CurveKind, abscissae: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if abscissae.len() != values.len() {
            return Err(TheoryError::InvalidSpec(format!(
                "curve lengths differ: {} vs {}",
                abscissae.len(),
                values.len()
            )));
        }
        Ok(Self { kind, abscissae, values })
    }

    /// Two-column CSV with a header naming the columns.
    pub fn to_csv(&self) -> String {
        let (a, b) = match self.kind {
            CurveKind::GVsQ => ("q", "g"),
            CurveKind::CVsOffset => ("offset", "c"),
            CurveKind::HistogramPdf => ("value", "pdf"),
        };
        let mut s = format!("{a},{b}\n");
        for (x, y) in self.abscissae.iter().zip(&self.values) {
            s.push_str(&format!("{x:.12e},{y:.12e}\n"));
        }
        s
    }
}

/// Value under `spec` and under a refined spec; errors when they differ by
/// more than `tol` relative.
pub fn converged(spec: &KernelSpec, tol: f64, f: impl Fn(&KernelSpec) -> Result<f64>) -> Result<f64> {
    let value = f(spec)?;
    let refined = f(&spec.with_quadrature(spec.quadrature.doubled()))?;
    if (value - refined).abs() > tol * refined.abs().max(f64::MIN_POSITIVE) {
        return Err(TheoryError::NotConverged { value, refined });
    }
    Ok(refined)
}
