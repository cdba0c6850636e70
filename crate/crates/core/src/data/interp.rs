//! Separable Keys interpolation of a coarse sinogram onto a finer lattice
//! with the same `rho` range. The `alpha` direction is periodic; the `rho`
//! direction reads zero beyond the grid.

use super::keys::keys_kernel;
use super::{DataError, DataGrid, Sinogram};

/// Up to four `(coarse index, weight)` taps per fine index along one axis.
#[derive(Debug, Clone)]
struct AxisTaps {
    index: Vec<[usize; 4]>,
    weight: Vec<[f64; 4]>,
}

impl AxisTaps {
    /// `ratio_num / ratio_den` is the coarse coordinate step per fine node,
    /// kept rational so fine nodes that coincide with coarse nodes land on
    /// integers exactly.
    fn build(n_fine: usize, n_coarse: usize, num: usize, den: usize, periodic: bool) -> Self {
        let mut index = Vec::with_capacity(n_fine);
        let mut weight = Vec::with_capacity(n_fine);
        for i in 0..n_fine {
            let t = (i * num) as f64 / den as f64;
            let base = t.floor() as i64;
            let mut idx = [0usize; 4];
            let mut w = [0.0; 4];
            for (m, k) in (base - 1..=base + 2).enumerate() {
                let wk = keys_kernel(t - k as f64);
                if periodic {
                    idx[m] = k.rem_euclid(n_coarse as i64) as usize;
                    w[m] = wk;
                } else if (0..n_coarse as i64).contains(&k) {
                    idx[m] = k as usize;
                    w[m] = wk;
                }
            }
            index.push(idx);
            weight.push(w);
        }
        Self { index, weight }
    }
}

/// Precomputed interpolation from one grid to another.
#[derive(Debug, Clone)]
pub struct Interpolator {
    coarse: DataGrid,
    fine: DataGrid,
    alpha: AxisTaps,
    rho: AxisTaps,
}

impl Interpolator {
    pub fn new(coarse: DataGrid, fine: DataGrid) -> Result<Self, DataError> {
        let tol = 1e-12 * coarse.rho_max.abs().max(1.0);
        if fine.n_alpha < coarse.n_alpha
            || fine.n_rho < coarse.n_rho
            || (fine.rho_min - coarse.rho_min).abs() > tol
            || (fine.rho_max - coarse.rho_max).abs() > tol
        {
            return Err(DataError::GridMismatch);
        }
        let alpha = AxisTaps::build(fine.n_alpha, coarse.n_alpha, coarse.n_alpha, fine.n_alpha, true);
        let rho = AxisTaps::build(fine.n_rho, coarse.n_rho, coarse.n_rho - 1, fine.n_rho - 1, false);
        Ok(Self { coarse, fine, alpha, rho })
    }

    pub fn coarse_grid(&self) -> &DataGrid {
        &self.coarse
    }

    pub fn fine_grid(&self) -> &DataGrid {
        &self.fine
    }

    /// `g_fine(y) = sum_j keys((alpha - alpha_j)/d_alpha) keys((rho - rho_j)/d_rho) g_j`.
    pub fn apply(&self, coarse: &Sinogram) -> Result<Sinogram, DataError> {
        if !coarse.grid.same_as(&self.coarse) {
            return Err(DataError::GridMismatch);
        }
        let (na, nf_rho) = (self.coarse.n_alpha, self.fine.n_rho);
        // rho pass: coarse alpha x fine rho
        let mut tmp = vec![0.0; na * nf_rho];
        for j1 in 0..na {
            let row = coarse.row(j1);
            let out = &mut tmp[j1 * nf_rho..(j1 + 1) * nf_rho];
            for (i2, o) in out.iter_mut().enumerate() {
                let (idx, w) = (&self.rho.index[i2], &self.rho.weight[i2]);
                *o = w[0] * row[idx[0]] + w[1] * row[idx[1]] + w[2] * row[idx[2]] + w[3] * row[idx[3]];
            }
        }
        let mut fine = Sinogram::zeros(self.fine);
        for i1 in 0..self.fine.n_alpha {
            let (idx, w) = (&self.alpha.index[i1], &self.alpha.weight[i1]);
            let out = &mut fine.values[i1 * nf_rho..(i1 + 1) * nf_rho];
            for m in 0..4 {
                if w[m] == 0.0 {
                    continue;
                }
                let src = &tmp[idx[m] * nf_rho..(idx[m] + 1) * nf_rho];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += w[m] * s;
                }
            }
        }
        Ok(fine)
    }

    /// Transpose of [`Self::apply`] on raw coefficient arrays (no quadrature
    /// weights).
    pub fn apply_transpose(&self, fine: &Sinogram) -> Result<Sinogram, DataError> {
        if !fine.grid.same_as(&self.fine) {
            return Err(DataError::GridMismatch);
        }
        let (na, nf_rho) = (self.coarse.n_alpha, self.fine.n_rho);
        let mut tmp = vec![0.0; na * nf_rho];
        for i1 in 0..self.fine.n_alpha {
            let (idx, w) = (&self.alpha.index[i1], &self.alpha.weight[i1]);
            let src = &fine.values[i1 * nf_rho..(i1 + 1) * nf_rho];
            for m in 0..4 {
                if w[m] == 0.0 {
                    continue;
                }
                let out = &mut tmp[idx[m] * nf_rho..(idx[m] + 1) * nf_rho];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += w[m] * s;
                }
            }
        }
        let mut coarse = Sinogram::zeros(self.coarse);
        let nc_rho = self.coarse.n_rho;
        for j1 in 0..na {
            let src = &tmp[j1 * nf_rho..(j1 + 1) * nf_rho];
            let out = &mut coarse.values[j1 * nc_rho..(j1 + 1) * nc_rho];
            for (i2, s) in src.iter().enumerate() {
                let (idx, w) = (&self.rho.index[i2], &self.rho.weight[i2]);
                for m in 0..4 {
                    out[idx[m]] += w[m] * s;
                }
            }
        }
        Ok(coarse)
    }
}

/// One-shot interpolation of `coarse` onto an `n_alpha_fine x n_rho_fine`
/// lattice with the same `rho` range.
pub fn interpolate_fine(coarse: &Sinogram, n_alpha_fine: usize, n_rho_fine: usize) -> Result<Sinogram, DataError> {
    let fine = DataGrid::with_range(n_alpha_fine, n_rho_fine, coarse.grid.rho_min, coarse.grid.rho_max)?;
    Interpolator::new(coarse.grid, fine)?.apply(coarse)
}
