//! Data lattice, analytic disk data, noise synthesis, thresholding and
//! Keys interpolation.

mod grid;
pub mod interp;
pub mod keys;
pub mod noise;
mod phantom;

use thiserror::Error;

pub use grid::{DataGrid, Sinogram};
pub use interp::{interpolate_fine, Interpolator};
pub use keys::{keys_kernel, keys_kernel_ft, sinc};
pub use noise::{hard_threshold, sample_noise, sigma_map, thresholded_noise, NoiseSpec};
pub use phantom::DiskPhantom;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("grids do not match")]
    GridMismatch,
    #[error("threshold bound must be positive, got {0}")]
    NonPositiveBound(f64),
}

/// Analytic noise-free data of the disk on every node.
pub fn disk_data(grid: &DataGrid, phantom: &DiskPhantom, radius: f64) -> Sinogram {
    Sinogram::from_fn(*grid, |j1, j2| phantom.forward_disk(radius, grid.node(j1, j2)))
}

/// Safety factor on the largest noise-free datum used as the threshold
/// bound `C`.
pub const THRESHOLD_SAFETY: f64 = 1.05;

/// Threshold bound `C = 1.05 * max |f_hat|` over the grid.
pub fn threshold_bound(f_hat: &Sinogram) -> f64 {
    THRESHOLD_SAFETY * f_hat.max_abs()
}
