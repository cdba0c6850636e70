use std::f64::consts::{PI, TAU};

use grtlab::data::{keys_kernel, keys_kernel_ft, DiskPhantom, NoiseSpec};
use grtlab::geometry::{DataPoint, GrtModel, Point2};
use grtlab::theory::*;

const MU: f64 = 0.9005844;
const KAPPA: f64 = 0.5;

fn x0() -> Point2 {
    Point2::new(1.2, 0.7)
}

fn spec() -> KernelSpec {
    KernelSpec::new(GrtModel::default(), x0(), KAPPA, MU).unwrap()
}

fn alpha_100() -> f64 {
    TAU * 100.0 / 300.0
}

/// Noise level of the disk experiment along the curves through `x0`.
fn disk_sigma(scale: f64) -> impl Fn(f64, f64) -> f64 + Sync {
    let noise = NoiseSpec { scale, ..NoiseSpec::default() };
    let disk = DiskPhantom::new(Point2::new(1.0, 1.0), 2.0);
    move |a, r| noise.sigma(a, r, disk.circle_meets(10.0, DataPoint::new(a, r)))
}

/// Composite Simpson rule, kept apart from the library's Gauss-Legendre.
fn simpson(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// `(mu / pi) lambda / (4 pi + kappa lambda^3) i(lambda) i(mu a lambda)`.
fn g_integrand(lambda: f64, a: f64) -> f64 {
    MU / PI * lambda / (4.0 * PI + KAPPA * lambda.powi(3)) * keys_kernel_ft(lambda) * keys_kernel_ft(MU * a * lambda)
}

fn chord(alpha: f64) -> f64 {
    GrtModel::default().chord_distance(x0(), alpha).unwrap()
}

#[test]
fn vartheta_collapses_when_phi_prime_vanishes() {
    // Theta is perpendicular to alpha_perp when x sits on the ray through R alpha_vec
    let alpha = 0.3;
    let x = 2.0 * Point2::unit(alpha);
    let model = GrtModel::default();
    assert!(model.phi_alpha_prime(x, alpha).unwrap().abs() < 1e-12);
    let s = KernelSpec::new(model, x, KAPPA, MU).unwrap();
    let area = simpson(-2.0, 2.0, 4000, keys_kernel);
    assert!((area - 1.0).abs() < 1e-10);
    for t in [-1.7, -0.4, 0.0, 0.25, 1.1] {
        let v = vartheta(t, x, alpha, &s).unwrap();
        assert!((v - keys_kernel(t) * area).abs() < 1e-12, "t={t}: {v}");
    }
}

#[test]
fn vartheta_vanishes_off_support() {
    let s = spec();
    let c = MU * GrtModel::default().phi_alpha_prime(x0(), alpha_100()).unwrap();
    let edge = 2.0 + 2.0 * c.abs();
    for t in [edge + 0.01, edge + 5.0, -edge - 0.3] {
        assert_eq!(vartheta(t, x0(), alpha_100(), &s).unwrap(), 0.0);
    }
    assert!(vartheta(0.0, x0(), alpha_100(), &s).unwrap() > 0.1);
}

#[test]
fn vartheta_transform_is_a_product() {
    let s = spec();
    let c = MU * GrtModel::default().phi_alpha_prime(x0(), alpha_100()).unwrap();
    let edge = 2.0 + 2.0 * c.abs();
    for lambda in [0.3, 1.0, 2.0] {
        let numeric = simpson(-edge, edge, 8000, |t| {
            vartheta(t, x0(), alpha_100(), &s).unwrap() * (lambda * t).cos()
        });
        let exact = vartheta_ft(lambda, x0(), alpha_100(), &s).unwrap();
        let product = keys_kernel_ft(lambda) * keys_kernel_ft(-c * lambda);
        assert!((exact - product).abs() < 1e-15);
        assert!((numeric - exact).abs() < 1e-6, "lambda={lambda}: {numeric} vs {exact}");
    }
}

#[test]
fn k0_is_even_and_decays() {
    let s = spec();
    let a = alpha_100();
    for t in [0.3, 1.0, 2.5, 7.0] {
        let (p, m) = (k0_kernel(t, x0(), a, &s).unwrap(), k0_kernel(-t, x0(), a, &s).unwrap());
        assert!((p - m).abs() < 1e-10);
    }
    let k0 = k0_kernel(0.0, x0(), a, &s).unwrap();
    let k20 = k0_kernel(20.0, x0(), a, &s).unwrap();
    assert!(k0 > 0.0);
    assert!(k20.abs() / k0 < 0.01, "{k20} / {k0}");
}

#[test]
fn k0_matches_simpson_oracle() {
    // (1/pi) int_0^inf lambda / (4 pi + kappa lambda^3) cos(lambda t) d lambda,
    // with the tail beyond 4000 from the 1 / (kappa lambda^2) asymptote
    let s = spec();
    for t in [0.0, 0.7, 3.0] {
        let head = simpson(0.0, 4000.0, 2_000_000, |l| l / (4.0 * PI + KAPPA * l.powi(3)) * (l * t).cos());
        let tail = if t == 0.0 { 1.0 / (KAPPA * 4000.0) } else { 0.0 };
        let oracle = (head + tail) / PI;
        let got = k0_kernel(t, x0(), alpha_100(), &s).unwrap();
        assert!((got - oracle).abs() < 2e-6, "t={t}: {got} vs {oracle}");
    }
}

#[test]
fn k0_has_zero_mean() {
    // K0(t) ~ -1 / (pi Q0 t^2), so int_{|t| > T} K0 = -2 / (pi Q0 T)
    let s = spec();
    let big_t = 40.0;
    let body = simpson(0.0, big_t, 1600, |t| k0_kernel(t, x0(), alpha_100(), &s).unwrap()) * 2.0;
    let tail = -2.0 / (PI * 4.0 * PI * big_t);
    let peak = k0_kernel(0.0, x0(), alpha_100(), &s).unwrap();
    assert!((body + tail).abs() < 1e-3 * peak, "{body} + {tail}");
}

#[test]
fn g_matches_simpson_oracle() {
    let s = spec();
    let a = chord(alpha_100());
    for q in [0.0, 0.8, 2.5] {
        let oracle = simpson(0.0, 200.0, 400_000, |l| g_integrand(l, a) * (l * q).cos());
        let got = g_kernel(x0(), alpha_100(), q, &s).unwrap();
        assert!((got - oracle).abs() < 1e-9, "q={q}: {got} vs {oracle}");
    }
}

#[test]
fn g_is_even_and_peaks_at_zero() {
    let s = spec();
    for alpha in [0.2, alpha_100(), 4.0] {
        let g0 = g_kernel(x0(), alpha, 0.0, &s).unwrap();
        for k in 1..60 {
            let q = 0.1 * k as f64;
            let gp = g_kernel(x0(), alpha, q, &s).unwrap();
            let gm = g_kernel(x0(), alpha, -q, &s).unwrap();
            assert!((gp - gm).abs() < 1e-10);
            assert!(gp < g0, "alpha={alpha} q={q}");
        }
    }
}

#[test]
fn g_direct_and_convolution_agree() {
    let s = spec();
    for q in [0.0, 1.5, 4.0] {
        let direct = g_kernel(x0(), alpha_100(), q, &s).unwrap();
        let conv = g_kernel_by_convolution(x0(), alpha_100(), q, &s).unwrap();
        assert!((direct - conv).abs() < 1e-6, "q={q}: {direct} vs {conv}");
    }
}

#[test]
fn g_decays_like_inverse_square() {
    let s = spec();
    let a = alpha_100();
    let g0 = g_kernel(x0(), a, 0.0, &s).unwrap();
    for q in [5.0, 10.0, 20.0, 40.0] {
        let g = g_kernel(x0(), a, q, &s).unwrap();
        assert!(g.abs() * (1.0 + q).powi(2) < 2.0 * g0, "q={q}: {g}");
    }
    // leading term -mu W / (pi Q0 q^2)
    let q = 40.0;
    let lead = -MU / (PI * 4.0 * PI * q * q);
    assert!((g_kernel(x0(), a, q, &s).unwrap() / lead - 1.0).abs() < 0.02);
}

#[test]
fn quadrature_doubling_is_stable() {
    let s = spec();
    let sigma = disk_sigma(1.0);
    let opts = CovarianceOptions::default();
    for q in [0.0, 1.5, 4.0] {
        converged(&s, 1e-6, |sp| g_kernel(x0(), alpha_100(), q, sp)).unwrap();
    }
    converged(&s, 1e-6, |sp| k0_kernel(0.5, x0(), alpha_100(), sp)).unwrap();
    converged(&s, 1e-6, |sp| variance_at(sp, &sigma, &opts)).unwrap();
    converged(&s, 1e-6, |sp| covariance(Point2::new(1.24, -1.77), sp, &sigma, &opts)).unwrap();
}

#[test]
fn variance_at_reference_point() {
    let c0 = variance_at(&spec(), &disk_sigma(1.0), &CovarianceOptions::default()).unwrap();
    assert!((c0 - 0.043).abs() < 5e-4, "C(0) = {c0}");
}

#[test]
fn covariance_at_offset_matches_prototype() {
    // independent double-precision prototype (numpy/scipy quad) gives 0.0020897
    let c = covariance(Point2::new(1.24, -1.77), &spec(), &disk_sigma(1.0), &CovarianceOptions::default()).unwrap();
    assert!((c - 0.0020897).abs() < 2e-7, "C = {c}");
}

#[test]
fn covariance_halving_alpha_nodes() {
    let s = spec();
    let sigma = disk_sigma(1.0);
    let full = CovarianceOptions::default();
    let half = CovarianceOptions { n_alpha: full.n_alpha / 2, ..full };
    for x in [Point2::ZERO, Point2::new(1.24, -1.77)] {
        let a = covariance(x, &s, &sigma, &full).unwrap();
        let b = covariance(x, &s, &sigma, &half).unwrap();
        assert!((a - b).abs() < 1e-4 * a.abs().max(1e-3), "{a} vs {b}");
    }
}

#[test]
fn covariance_trivial_limits() {
    let s = spec();
    let opts = CovarianceOptions { n_alpha: 400, ..Default::default() };
    assert_eq!(variance_at(&s, &|_, _| 0.0, &opts).unwrap(), 0.0);
    let one = variance_at(&s, &disk_sigma(1.0), &opts).unwrap();
    let two = variance_at(&s, &disk_sigma(2.0), &opts).unwrap();
    assert!((two / one - 4.0).abs() < 1e-12);
    let mut prev = one;
    for kappa in [5.0, 50.0, 5e3, 5e6] {
        let stiff = KernelSpec::new(GrtModel::default(), x0(), kappa, MU).unwrap();
        let v = variance_at(&stiff, &disk_sigma(1.0), &opts).unwrap();
        assert!(v < prev);
        prev = v;
    }
    assert!(prev < 1e-3 * one);
}

#[test]
fn covariance_is_symmetric_and_psd() {
    let s = spec();
    let sigma = disk_sigma(1.0);
    let opts = CovarianceOptions { n_alpha: 600, ..Default::default() };
    let pts = [
        Point2::new(0.0, 0.0),
        Point2::new(1.24, -1.77),
        Point2::new(-0.6, 0.4),
        Point2::new(0.9, 1.3),
        Point2::new(-1.5, -0.2),
    ];
    for x in pts {
        let a = covariance(x, &s, &sigma, &opts).unwrap();
        let b = covariance(Point2::new(-x.x1, -x.x2), &s, &sigma, &opts).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
    let n = pts.len();
    let mut m = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = covariance(pts[i] - pts[j], &s, &sigma, &opts).unwrap();
        }
    }
    let trace: f64 = (0..n).map(|i| m[i][i]).sum();
    assert!(min_eigenvalue(&m) >= -1e-8 * trace);
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
fn min_eigenvalue(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    let mut a = m.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

#[test]
fn jacobi_oracle_sanity() {
    let m = vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0], vec![0.0, 0.0, 5.0]];
    assert!((min_eigenvalue(&m) - 1.0).abs() < 1e-12);
}

#[test]
fn correlation_at_zero_is_parseval() {
    // int G^2 dq = pi int_0^inf F(lambda)^2 d lambda for G(q) = int_0^inf F cos
    let s = spec();
    let opts = CovarianceOptions::default();
    for alpha in [0.4, alpha_100(), 5.1] {
        let a = chord(alpha);
        let parseval = PI * simpson(0.0, 200.0, 400_000, |l| g_integrand(l, a).powi(2));
        let got = gg_correlation(alpha, 0.0, &s, &opts).unwrap();
        assert!(got.value > 0.0);
        assert!((got.value - parseval).abs() < 1e-6 * parseval, "{} vs {parseval}", got.value);
    }
}

#[test]
fn correlation_is_even() {
    let s = spec();
    let opts = CovarianceOptions::default();
    for p in [0.5, 1.7, 3.0] {
        let a = gg_correlation(alpha_100(), p, &s, &opts).unwrap().value;
        let b = gg_correlation(alpha_100(), -p, &s, &opts).unwrap().value;
        assert!((a - b).abs() < 1e-12 * a.abs().max(1e-6));
    }
}

#[test]
fn two_covariance_formulas_agree() {
    let s = spec();
    let sigma = disk_sigma(1.0);
    let opts = CovarianceOptions { n_alpha: 500, ..Default::default() };
    let offsets = [
        Point2::ZERO,
        Point2::new(1.24, -1.77),
        Point2::new(0.31, 0.52),
        Point2::new(-0.8, 0.15),
        Point2::new(0.05, -1.1),
    ];
    let via = covariance_via_correlation(&offsets, &s, &sigma, &opts).unwrap();
    for (x, v) in offsets.iter().zip(&via) {
        let direct = covariance(*x, &s, &sigma, &opts).unwrap();
        assert!((v - direct).abs() < 1e-4 * direct.abs(), "{x:?}: {v} vs {direct}");
    }
}

#[test]
fn classical_instance_shares_the_kernel_path() {
    let model = GrtModel::ClassicalRadon;
    let x = Point2::new(0.4, -0.3);
    let s = KernelSpec::new(model, x, KAPPA, MU).unwrap();
    assert!((model.q0(x, Point2::new(0.3, 0.8)).unwrap() - 4.0 * PI).abs() < 1e-12);
    for alpha in [0.3, 1.9, 4.4] {
        let a = Point2::unit(alpha).perp().dot(x).abs();
        for q in [0.0, 1.0, 3.0] {
            let oracle = simpson(0.0, 200.0, 400_000, |l| g_integrand(l, a) * (l * q).cos());
            let got = g_kernel(x, alpha, q, &s).unwrap();
            assert!((got - oracle).abs() < 1e-9, "alpha={alpha} q={q}");
        }
    }
}

#[test]
fn curve_csv_and_shape_check() {
    assert!(TheoryCurve::new(CurveKind::GVsQ, vec![0.0, 1.0], vec![1.0]).is_err());
    let c = TheoryCurve::new(CurveKind::CVsOffset, vec![0.0, 0.5], vec![0.04, 0.03]).unwrap();
    let csv = c.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "offset,c");
    assert_eq!(lines.len(), 3);
    let back: f64 = lines[2].split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(back, 0.03);
}

#[test]
fn invalid_specs_rejected() {
    assert!(KernelSpec::new(GrtModel::default(), x0(), 0.0, MU).is_err());
    assert!(KernelSpec::new(GrtModel::default(), x0(), KAPPA, -1.0).is_err());
    assert!(KernelSpec::new(GrtModel::default(), Point2::new(11.0, 0.0), KAPPA, MU).is_err());
}
