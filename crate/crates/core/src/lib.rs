//! Numerical laboratory for iterative Tikhonov reconstruction from noisy
//! circular Radon data, with closed-form predictions of the local noise
//! kernel and covariance of the reconstruction.

pub mod data;
pub mod geometry;
pub mod harness;
pub mod operators;
pub mod solver;
pub mod theory;
