use std::f64::consts::{SQRT_2, TAU};

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::geometry::DataPoint;

/// The `(alpha, rho)` lattice: `alpha_j = j * 2pi / n_alpha` (periodic) and
/// `rho_j = rho_min + j * delta_rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataGrid {
    pub n_alpha: usize,
    pub n_rho: usize,
    pub rho_min: f64,
    pub rho_max: f64,
}

impl DataGrid {
    /// Grid covering all circles that meet the square `(-r_rec, r_rec)^2`.
    pub fn build(n_alpha: usize, n_rho: usize, radius: f64, r_rec: f64) -> Result<Self, DataError> {
        let half_diag = r_rec * SQRT_2;
        if !(r_rec > 0.0 && half_diag < radius) {
            return Err(DataError::InvalidGrid(format!(
                "need 0 < r_rec * sqrt(2) < R (r_rec = {r_rec}, R = {radius})"
            )));
        }
        Self::with_range(n_alpha, n_rho, radius - half_diag, radius + half_diag)
    }

    pub fn with_range(n_alpha: usize, n_rho: usize, rho_min: f64, rho_max: f64) -> Result<Self, DataError> {
        if n_alpha < 4 || n_rho < 2 {
            return Err(DataError::InvalidGrid(format!(
                "need n_alpha >= 4 and n_rho >= 2, got {n_alpha} x {n_rho}"
            )));
        }
        if !(rho_min.is_finite() && rho_max.is_finite() && rho_max > rho_min) {
            return Err(DataError::InvalidGrid(format!("rho range [{rho_min}, {rho_max}]")));
        }
        Ok(Self { n_alpha, n_rho, rho_min, rho_max })
    }

    pub fn delta_alpha(&self) -> f64 {
        TAU / self.n_alpha as f64
    }

    pub fn delta_rho(&self) -> f64 {
        (self.rho_max - self.rho_min) / (self.n_rho - 1) as f64
    }

    /// Ratio `delta_alpha / delta_rho`.
    pub fn mu(&self) -> f64 {
        self.delta_alpha() / self.delta_rho()
    }

    /// Native scale; equals `delta_rho`.
    pub fn eps(&self) -> f64 {
        self.delta_rho()
    }

    pub fn alpha(&self, j1: usize) -> f64 {
        j1 as f64 * self.delta_alpha()
    }

    pub fn rho(&self, j2: usize) -> f64 {
        self.rho_min + j2 as f64 * self.delta_rho()
    }

    pub fn node(&self, j1: usize, j2: usize) -> DataPoint {
        DataPoint::new(self.alpha(j1), self.rho(j2))
    }

    pub fn len(&self) -> usize {
        self.n_alpha * self.n_rho
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Quadrature weight of one node, `delta_alpha * delta_rho`.
    pub fn cell_area(&self) -> f64 {
        self.delta_alpha() * self.delta_rho()
    }

    /// Grids agree on counts and range up to round-off.
    pub fn same_as(&self, other: &DataGrid) -> bool {
        let tol = 1e-12 * self.rho_max.abs().max(1.0);
        self.n_alpha == other.n_alpha
            && self.n_rho == other.n_rho
            && (self.rho_min - other.rho_min).abs() <= tol
            && (self.rho_max - other.rho_max).abs() <= tol
    }
}

/// Values on a [`DataGrid`], row-major in `(j1, j2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sinogram {
    pub grid: DataGrid,
    pub values: Vec<f64>,
}

impl Sinogram {
    pub fn zeros(grid: DataGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: DataGrid, values: Vec<f64>) -> Result<Self, DataError> {
        if values.len() != grid.len() {
            return Err(DataError::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: DataGrid, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j1 in 0..grid.n_alpha {
            for j2 in 0..grid.n_rho {
                values.push(f(j1, j2));
            }
        }
        Self { grid, values }
    }

    #[inline]
    pub fn index(&self, j1: usize, j2: usize) -> usize {
        j1 * self.grid.n_rho + j2
    }

    pub fn get(&self, j1: usize, j2: usize) -> f64 {
        self.values[self.index(j1, j2)]
    }

    pub fn set(&mut self, j1: usize, j2: usize, v: f64) {
        let i = self.index(j1, j2);
        self.values[i] = v;
    }

    pub fn row(&self, j1: usize) -> &[f64] {
        let n = self.grid.n_rho;
        &self.values[j1 * n..(j1 + 1) * n]
    }

    /// Quadrature-weighted inner product approximating the `L^2` pairing over
    /// the data domain.
    pub fn dot(&self, other: &Sinogram) -> f64 {
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum();
        s * self.grid.cell_area()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &Sinogram) {
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_grid_constants() {
        let g = DataGrid::build(300, 451, 10.0, 3.7).unwrap();
        assert!((g.delta_alpha() - 0.0209440).abs() < 1e-7);
        assert!((g.delta_rho() - 0.0232560).abs() < 1e-7);
        assert!((g.mu() - 0.9005844).abs() < 1e-7);
        assert!((g.rho_min - 4.76741).abs() < 1e-5);
        assert!((g.rho_max - 15.23259).abs() < 1e-5);
        assert_eq!(g.eps(), g.delta_rho());
        let y = g.node(100, 229);
        assert!((y.alpha - 2.0944).abs() < 1e-4);
        assert!((y.rho - 10.09303).abs() < 1e-4);
        assert!((y.alpha - 2.1).abs() < 0.01 && (y.rho - 10.1).abs() < 0.01);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(DataGrid::build(3, 451, 10.0, 3.7).is_err());
        assert!(DataGrid::build(300, 1, 10.0, 3.7).is_err());
        assert!(DataGrid::build(300, 451, 10.0, 7.2).is_err());
        assert!(DataGrid::build(300, 451, 10.0, -1.0).is_err());
    }

    #[test]
    fn sinogram_shape_checked() {
        let g = DataGrid::build(8, 5, 10.0, 3.7).unwrap();
        assert!(Sinogram::from_values(g, vec![0.0; 39]).is_err());
        let s = Sinogram::from_fn(g, |a, r| (a * 10 + r) as f64);
        assert_eq!(s.get(3, 4), 34.0);
        assert_eq!(s.row(2)[1], 21.0);
    }
}
