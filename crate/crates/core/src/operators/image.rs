use serde::{Deserialize, Serialize};

use super::OperatorError;
use crate::geometry::Point2;

/// Square-pixel raster over `[x_lo, x_hi] x [y_lo, y_hi]` with `n` nodes
/// per side; nodes sit on the rectangle corners and edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImageGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub n: usize,
}

impl ImageGrid {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, n: usize) -> Result<Self, OperatorError> {
        if n < 3 {
            return Err(OperatorError::InvalidImageGrid(format!("n = {n} < 3")));
        }
        if !(x_hi > x_lo && y_hi > y_lo) {
            return Err(OperatorError::InvalidImageGrid("empty rectangle".into()));
        }
        let wx = x_hi - x_lo;
        let wy = y_hi - y_lo;
        if ((wx - wy) / wx).abs() > 1e-9 {
            return Err(OperatorError::InvalidImageGrid(format!("pixels not square ({wx} x {wy})")));
        }
        Ok(Self { x_lo, x_hi, y_lo, y_hi, n })
    }

    /// Square `(-half, half)^2`.
    pub fn centered_square(half: f64, n: usize) -> Result<Self, OperatorError> {
        Self::new(-half, half, -half, half, n)
    }

    pub fn pixel(&self) -> f64 {
        (self.x_hi - self.x_lo) / (self.n - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Node coordinate; `i` indexes `x1`, `k` indexes `x2`.
    pub fn point(&self, i: usize, k: usize) -> Point2 {
        let h = self.pixel();
        Point2::new(self.x_lo + i as f64 * h, self.y_lo + k as f64 * h)
    }

    /// Row-major offset: `x2` index major, `x1` index minor.
    #[inline]
    pub fn offset(&self, i: usize, k: usize) -> usize {
        k * self.n + i
    }

    pub fn contains(&self, x: Point2) -> bool {
        x.x1 >= self.x_lo && x.x1 <= self.x_hi && x.x2 >= self.y_lo && x.x2 <= self.y_hi
    }

    /// Largest distance from the origin to the rectangle.
    pub fn max_radius(&self) -> f64 {
        let cx = self.x_lo.abs().max(self.x_hi.abs());
        let cy = self.y_lo.abs().max(self.y_hi.abs());
        cx.hypot(cy)
    }

    pub fn is_boundary(&self, i: usize, k: usize) -> bool {
        i == 0 || k == 0 || i + 1 == self.n || k + 1 == self.n
    }

    /// Bilinear stencil at `x`: four offsets and weights, or `None` outside.
    #[inline]
    pub fn bilinear_stencil(&self, x: Point2) -> Option<([usize; 4], [f64; 4])> {
        let h = self.pixel();
        let u = (x.x1 - self.x_lo) / h;
        let v = (x.x2 - self.y_lo) / h;
        let top = (self.n - 1) as f64;
        // admit round-off on the rectangle edges
        const SLACK: f64 = 1e-9;
        if !(u >= -SLACK && u <= top + SLACK && v >= -SLACK && v <= top + SLACK) {
            return None;
        }
        let u = u.clamp(0.0, top);
        let v = v.clamp(0.0, top);
        let i = (u.floor() as usize).min(self.n - 2);
        let k = (v.floor() as usize).min(self.n - 2);
        let fu = u - i as f64;
        let fv = v - k as f64;
        let o = self.offset(i, k);
        Some((
            [o, o + 1, o + self.n, o + self.n + 1],
            [(1.0 - fu) * (1.0 - fv), fu * (1.0 - fv), (1.0 - fu) * fv, fu * fv],
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub grid: ImageGrid,
    pub values: Vec<f64>,
}

impl Image {
    pub fn zeros(grid: ImageGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_fn(grid: ImageGrid, mut f: impl FnMut(Point2) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.n {
            for i in 0..grid.n {
                values.push(f(grid.point(i, k)));
            }
        }
        Self { grid, values }
    }

    pub fn from_values(grid: ImageGrid, values: Vec<f64>) -> Result<Self, OperatorError> {
        if values.len() != grid.len() {
            return Err(OperatorError::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        Ok(Self { grid, values })
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[self.grid.offset(i, k)]
    }

    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        let o = self.grid.offset(i, k);
        self.values[o] = v;
    }

    /// Bilinear read at an arbitrary point; `None` outside the rectangle.
    pub fn sample(&self, x: Point2) -> Option<f64> {
        self.grid
            .bilinear_stencil(x)
            .map(|(o, w)| (0..4).map(|m| w[m] * self.values[o[m]]).sum())
    }

    /// Sets the outer ring of nodes to zero.
    pub fn zero_boundary(&mut self) {
        let n = self.grid.n;
        for i in 0..n {
            self.values[i] = 0.0;
            self.values[(n - 1) * n + i] = 0.0;
            self.values[i * n] = 0.0;
            self.values[i * n + n - 1] = 0.0;
        }
    }

    /// Inner product weighted by the pixel area.
    pub fn dot(&self, other: &Image) -> f64 {
        let h = self.grid.pixel();
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * h * h
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn axpy(&mut self, a: f64, other: &Image) {
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += a * w;
        }
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// Largest absolute difference between two images on the same grid.
    pub fn sup_diff(&self, other: &Image) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }
}
