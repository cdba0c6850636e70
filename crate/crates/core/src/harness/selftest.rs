//! Invariant checks of every module, reported item by item.
//!
//! Each item is also exposed on its own so tests can run it directly.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::stats::{all_pass, Check};
use super::theory_run::g_doubling_error;
use super::HarnessError;
use crate::data::{disk_data, keys_kernel, keys_kernel_ft, noise::sample_noise_with, DataGrid, DiskPhantom, Sinogram};
use crate::geometry::{GrtModel, Point2};
use crate::operators::{forward_project, Image, ImageGrid, Projector, ProjectorSpec};
use crate::solver::{SolverConfig, SolverMethod, Tikhonov};
use crate::theory::QuadratureSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Small problem shared by the operator items.
pub fn small_projector(n: usize) -> Result<Projector, HarnessError> {
    let grid = ImageGrid::centered_square(3.7, n)?;
    let fine = DataGrid::build(48, 61, 10.0, 3.7)?;
    Ok(Projector::new(ProjectorSpec::new(fine, 10.0), grid)?)
}

fn random_image(grid: ImageGrid, rng: &mut ChaCha8Rng) -> Image {
    let mut img = Image::from_fn(grid, |_| rng.random::<f64>() - 0.5);
    img.zero_boundary();
    img
}

fn random_sinogram(grid: DataGrid, rng: &mut ChaCha8Rng) -> Sinogram {
    Sinogram::from_fn(grid, |_, _| rng.random::<f64>() - 0.5)
}

/// Largest `|Q0 - 4 pi|` over `n` random `(x, xi)` with `|x| <= 0.9 R`.
pub fn symbol_error(model: &GrtModel, radius: f64, n: usize, seed: u64) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n {
        let r = 0.9 * radius * rng.random::<f64>().sqrt();
        let x = r * Point2::unit(TAU * rng.random::<f64>());
        let xi = rng.random_range(0.1..10.0) * Point2::unit(TAU * rng.random::<f64>());
        let q0 = model.q0(x, xi).map_err(|e| HarnessError::Theory(e.into()))?;
        worst = worst.max((q0 - 4.0 * PI).abs());
    }
    Ok(worst)
}

/// Worst relative adjoint defect `|<R f, g> - <f, R* g>| / (|R f| |g|)`.
/// `skew` multiplies the back-projection, a deliberate fault when not 1.
pub fn adjoint_error(proj: &Projector, pairs: usize, seed: u64, skew: f64) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let f = random_image(*proj.image_grid(), &mut rng);
        let g = random_sinogram(*proj.data_grid(), &mut rng);
        let rf = proj.forward(&f)?;
        let mut back = proj.back(&g)?;
        back.scale(skew);
        let scale = rf.norm_sq().sqrt() * g.norm_sq().sqrt();
        worst = worst.max((rf.dot(&g) - f.dot(&back)).abs() / scale);
    }
    Ok(worst)
}

/// Worst relative gap between the gradient and central differences of the
/// objective along random directions.
pub fn gradient_error(proj: &Projector, cfg: &SolverConfig, dirs: usize, seed: u64) -> Result<f64, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tk = Tikhonov::new(proj, cfg)?;
    let g = random_sinogram(*proj.data_grid(), &mut rng);
    let f = random_image(*proj.image_grid(), &mut rng);
    let grad = tk.gradient(&f, &g)?;
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..dirs {
        let v = random_image(*proj.image_grid(), &mut rng);
        let mut fp = f.clone();
        fp.axpy(h, &v);
        let mut fm = f.clone();
        fm.axpy(-h, &v);
        let fd = (tk.objective(&fp, &g)? - tk.objective(&fm, &g)?) / (2.0 * h);
        let an = grad.dot(&v);
        worst = worst.max((fd - an).abs() / an.abs());
    }
    Ok(worst)
}

/// Largest absolute violation of the Keys kernel identities: interpolation,
/// partition of unity, evenness and the transform at the integers.
pub fn keys_defect() -> f64 {
    let mut worst = (keys_kernel(0.0) - 1.0).abs().max((keys_kernel_ft(0.0) - 1.0).abs());
    for k in 1..4 {
        worst = worst.max(keys_kernel(k as f64).abs());
        worst = worst.max(keys_kernel_ft(TAU * k as f64).abs());
    }
    for i in 0..100 {
        let t = i as f64 / 100.0;
        let sum: f64 = (-3..=3).map(|k| keys_kernel(t - k as f64)).sum();
        worst = worst.max((sum - 1.0).abs());
        worst = worst.max((keys_kernel(1.7 * t) - keys_kernel(-1.7 * t)).abs());
    }
    worst
}

/// Worst relative gap between the empirical noise variance and
/// `sigma^2 delta_alpha` over `draws` samples of a small sinogram.
pub fn noise_variance_error(draws: usize, seed: u64) -> Result<f64, HarnessError> {
    let grid = DataGrid::with_range(8, 3, 9.0, 11.0)?;
    let sigma = Sinogram::from_fn(grid, |j1, j2| 0.3 + 0.2 * j1 as f64 + 0.5 * j2 as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum_sq = vec![0.0; grid.len()];
    for _ in 0..draws {
        let nu = sample_noise_with(&sigma, &mut rng);
        for (acc, v) in sum_sq.iter_mut().zip(&nu.values) {
            *acc += v * v;
        }
    }
    let da = grid.delta_alpha();
    Ok(sum_sq
        .iter()
        .zip(&sigma.values)
        .map(|(s, sg)| (s / draws as f64 - sg * sg * da).abs() / (sg * sg * da))
        .fold(0.0, f64::max))
}

/// Relative L2 gap between the projected disk indicator and the exact arc
/// lengths on nodes above a tenth of the peak, and the relative change of
/// the projection when the arc step is halved.
pub fn forward_consistency(grid: ImageGrid, fine: DataGrid, radius: f64, disk: &DiskPhantom) -> Result<(f64, f64), HarnessError> {
    let spec = ProjectorSpec::new(fine, radius);
    let img = Image::from_fn(grid, |x| if disk.contains(x) { 1.0 } else { 0.0 });
    let s = forward_project(&img, &spec)?;
    let exact = disk_data(&fine, disk, radius);
    let cut = 0.1 * exact.max_abs();
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in s.values.iter().zip(&exact.values) {
        if *b > cut {
            num += (a - b).powi(2);
            den += b * b;
        }
    }
    let halved = forward_project(&img, &spec.with_arc_step(0.5 * spec.arc_step_factor))?;
    let mut d = halved.clone();
    d.axpy(-1.0, &s);
    Ok(((num / den).sqrt(), (d.norm_sq() / s.norm_sq()).sqrt()))
}

pub fn run_selftest(cfg: &ExperimentConfig) -> Result<SelftestReport, HarnessError> {
    let seed = cfg.seed;
    let mut checks = Vec::new();

    for (name, model) in [("q0_circular", cfg.model()), ("q0_classical", GrtModel::ClassicalRadon)] {
        checks.push(Check::at_most(name, symbol_error(&model, cfg.radius, 1000, seed)?, 1e-10));
    }

    let proj = small_projector(48)?;
    let skew = if cfg.selftest.perturb_adjoint { 1.0 + 1e-6 } else { 1.0 };
    checks.push(Check::at_most("adjoint", adjoint_error(&proj, 20, seed, skew)?, 1e-10));

    // a large eps keeps the small problem well conditioned
    let mut solver = SolverConfig { kappa: cfg.kappa, eps: 0.15, ..SolverConfig::default() };
    checks.push(Check::at_most("gradient", gradient_error(&proj, &solver, 10, seed)?, 1e-6));
    solver.method = SolverMethod::GradientDescent;
    solver.max_iters = 300;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_sinogram(*proj.data_grid(), &mut rng);
    let (_, rep) = Tikhonov::new(&proj, &solver)?.solve(&g, &solver)?;
    checks.push(Check::flag("descent_monotone", rep.is_monotone(), format!("{} iterations", rep.iterations)));

    checks.push(Check::at_most("keys_identities", keys_defect(), 1e-13));
    checks.push(Check::at_most("noise_variance", noise_variance_error(100_000, seed)?, 0.03));

    let (l2, step) = forward_consistency(
        ImageGrid::centered_square(cfg.r_rec, 201)?,
        DataGrid::build(90, 121, cfg.radius, cfg.r_rec)?,
        cfg.radius,
        &cfg.phantom,
    )?;
    checks.push(Check::at_most("forward_disk_l2", l2, 0.02));
    checks.push(Check::at_most("forward_arc_step", step, 0.005));

    let mut spec = cfg.kernel_spec()?;
    if cfg.selftest.reduced_quadrature {
        let q = spec.quadrature;
        spec = spec.with_quadrature(QuadratureSpec {
            panels: (q.panels / 4).max(1),
            nodes_per_panel: (q.nodes_per_panel / 4).max(1),
            ..q
        });
    }
    let alpha = cfg.coarse_grid()?.alpha(cfg.impulse_index.0);
    checks.push(Check::at_most("theory_quadrature", g_doubling_error(&spec, alpha)?, 1e-8));

    let pass = all_pass(&checks);
    Ok(SelftestReport { checks, pass })
}
