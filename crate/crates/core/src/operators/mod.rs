//! Discrete operators on the reconstruction raster: the circular projector,
//! its transpose, and the Dirichlet Laplacian of the regularizer.

mod image;
mod laplacian;
mod projector;

use thiserror::Error;

pub use image::{Image, ImageGrid};
pub use laplacian::{grad_norm_sq, neg_laplacian};
pub use projector::{back_project, forward_project, Projector, ProjectorSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("invalid image grid: {0}")]
    InvalidImageGrid(String),
    #[error("invalid projector spec: {0}")]
    InvalidSpec(String),
    #[error("geometry violation: {0}")]
    Geometry(String),
    #[error("grids do not match")]
    GridMismatch,
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
}
