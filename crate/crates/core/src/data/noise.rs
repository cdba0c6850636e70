//! Noise model: heteroscedastic uniform noise with variance
//! `sigma(y)^2 * delta_alpha`, zero on curves that miss the object, and the
//! hard-thresholding step applied before reconstruction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DataError, DataGrid, DiskPhantom, Sinogram};

/// Parameters of `sigma(y) = (1 + a sin 2 alpha)(1 - b cos rho)` and the
/// seed of the noise streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    /// Overall multiplier on `sigma`; 1 reproduces the reference setting.
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { seed: 0, a: 0.5, b: 0.4, scale: 1.0 }
    }
}

impl NoiseSpec {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Noise level at `(alpha, rho)`; zero when the curve misses the support.
    pub fn sigma(&self, alpha: f64, rho: f64, in_support: bool) -> f64 {
        if !in_support {
            return 0.0;
        }
        self.scale * (1.0 + self.a * (2.0 * alpha).sin()) * (1.0 - self.b * rho.cos())
    }

    /// Independent stream for one trial. Streams are keyed by
    /// `(seed, trial)` so trials can run in any order.
    pub fn stream(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }
}

/// `sigma(y_j)` on every node, with the geometric support test of the
/// phantom.
pub fn sigma_map(grid: &DataGrid, spec: &NoiseSpec, phantom: &DiskPhantom, radius: f64) -> Sinogram {
    Sinogram::from_fn(*grid, |j1, j2| {
        let y = grid.node(j1, j2);
        spec.sigma(y.alpha, y.rho, phantom.circle_meets(radius, y))
    })
}

/// Draws `u_j * sqrt(3 delta_alpha) * sigma_j` with `u_j ~ U[-1, 1]`, so
/// that each entry has variance `sigma_j^2 * delta_alpha`.
pub fn sample_noise_with(sigma: &Sinogram, rng: &mut impl Rng) -> Sinogram {
    let amp = (3.0 * sigma.grid.delta_alpha()).sqrt();
    let values = sigma
        .values
        .iter()
        .map(|&s| {
            // draw unconditionally so the stream layout does not depend on sigma
            let u: f64 = rng.random_range(-1.0..=1.0);
            if s == 0.0 {
                0.0
            } else {
                u * amp * s
            }
        })
        .collect();
    Sinogram { grid: sigma.grid, values }
}

pub fn sample_noise(
    grid: &DataGrid,
    spec: &NoiseSpec,
    phantom: &DiskPhantom,
    radius: f64,
    trial: u64,
) -> Sinogram {
    let sigma = sigma_map(grid, spec, phantom, radius);
    sample_noise_with(&sigma, &mut spec.stream(trial))
}

/// Keeps `g_j` when `|g_j| <= 2C`, otherwise replaces it by zero.
pub fn hard_threshold(g: &Sinogram, c_bound: f64) -> Result<Sinogram, DataError> {
    if !(c_bound > 0.0) {
        return Err(DataError::NonPositiveBound(c_bound));
    }
    let limit = 2.0 * c_bound;
    let values = g.values.iter().map(|&v| if v.abs() <= limit { v } else { 0.0 }).collect();
    Ok(Sinogram { grid: g.grid, values })
}

/// Working noise `eta = threshold(f_hat + nu) - f_hat`.
pub fn thresholded_noise(f_hat: &Sinogram, nu: &Sinogram, c_bound: f64) -> Result<Sinogram, DataError> {
    if !f_hat.grid.same_as(&nu.grid) {
        return Err(DataError::GridMismatch);
    }
    let mut g = f_hat.clone();
    g.axpy(1.0, nu);
    let mut eta = hard_threshold(&g, c_bound)?;
    eta.axpy(-1.0, f_hat);
    Ok(eta)
}
