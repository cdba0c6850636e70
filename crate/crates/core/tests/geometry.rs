use std::f64::consts::{PI, TAU};

use grtlab::geometry::{GrtModel, Point2};
use proptest::prelude::*;

const R: f64 = 10.0;

fn circ() -> GrtModel {
    GrtModel::circular(R).unwrap()
}

/// Points with `|x| <= 0.9 R`.
fn inner_point() -> impl Strategy<Value = Point2> {
    (0.0..1.0f64, 0.0..TAU).prop_map(|(u, t)| (0.9 * R * u.sqrt()) * Point2::unit(t))
}

fn covector() -> impl Strategy<Value = Point2> {
    (0.05..20.0f64, 0.0..TAU).prop_map(|(r, t)| r * Point2::unit(t))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn circle_gradient_is_unit(x in inner_point(), a in 0.0..TAU) {
        let g = circ().grad_x_phi(x, a).unwrap();
        prop_assert!((g.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn chord_distance_is_abs_alpha_derivative(x in inner_point(), a in 0.0..TAU) {
        for m in [circ(), GrtModel::ClassicalRadon] {
            let d = m.chord_distance(x, a).unwrap();
            let p = m.phi_alpha_prime(x, a).unwrap();
            prop_assert!((d - p.abs()).abs() < 1e-12, "{m:?}: {d} vs {p}");
        }
    }

    #[test]
    fn principal_symbol_is_four_pi(x in inner_point(), xi in covector()) {
        for m in [circ(), GrtModel::ClassicalRadon] {
            let q = m.q0(x, xi).unwrap();
            prop_assert!((q - 4.0 * PI).abs() < 1e-10, "{m:?}: {q}");
        }
    }

    #[test]
    fn dual_points_solve_their_equations(x in inner_point(), xi in covector()) {
        for m in [circ(), GrtModel::ClassicalRadon] {
            for y in m.dual_points(x, xi).unwrap().entries {
                prop_assert!((m.phi(x, y.alpha).unwrap() - y.rho).abs() < 1e-10);
                let g = m.grad_x_phi(x, y.alpha).unwrap();
                // parallel (either orientation) to xi
                let sin = g.cross(xi).abs() / (g.norm() * xi.norm());
                prop_assert!(sin < 1e-10, "{m:?}: sin = {sin}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn alpha_derivative_has_second_order_differences(x in inner_point(), a in 0.0..TAU) {
        let m = circ();
        let exact = m.phi_alpha_prime(x, a).unwrap();
        let err = |h: f64| {
            let fd = (m.phi(x, a + h).unwrap() - m.phi(x, a - h).unwrap()) / (2.0 * h);
            (fd - exact).abs()
        };
        let (e1, e2) = (err(1e-2), err(1e-3));
        // below this the differences are rounding, not truncation
        if e1 > 1e-9 {
            let order = (e1 / e2).log10();
            prop_assert!(order >= 1.9, "order {order} ({e1:e}, {e2:e})");
        }
        prop_assert!(err(1e-4) < 1e-6 * (1.0 + exact.abs()));
    }
}

#[test]
fn alpha_derivative_order_at_small_steps() {
    // at h = 1e-4 and 1e-5 the truncation error is near rounding level, so
    // measure the order where the second derivative is large
    let m = circ();
    let (x, a) = (Point2::new(8.5, 0.3), 0.4);
    let exact = m.phi_alpha_prime(x, a).unwrap();
    let err = |h: f64| ((m.phi(x, a + h).unwrap() - m.phi(x, a - h).unwrap()) / (2.0 * h) - exact).abs();
    let order = (err(1e-4) / err(1e-5)).log10();
    assert!(order >= 1.9, "order {order}");
}

#[test]
fn rejects_points_outside_and_zero_covectors() {
    let m = circ();
    assert!(m.phi(Point2::new(R, 0.0), 0.3).is_err());
    assert!(m.q0(Point2::new(1.0, 0.0), Point2::ZERO).is_err());
    assert!(GrtModel::circular(-1.0).is_err());
}
