//! Keys cubic-convolution kernel and its Fourier transform.
//!
//! The kernel equals `3 B3(t) - (B2(t - 1/2) + B2(t + 1/2))` with `Bn` the
//! centred cardinal B-spline of degree `n`. It interpolates node values,
//! reproduces constants and is supported on `[-2, 2]`.

/// Keys kernel (cubic convolution with `a = -1/2`).
#[inline]
pub fn keys_kernel(t: f64) -> f64 {
    let s = t.abs();
    if s < 1.0 {
        (1.5 * s - 2.5) * s * s + 1.0
    } else if s < 2.0 {
        ((-0.5 * s + 2.5) * s - 4.0) * s + 2.0
    } else {
        0.0
    }
}

/// Breakpoints of the piecewise-cubic kernel.
pub const KEYS_KNOTS: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// Half-width of the kernel support.
pub const KEYS_SUPPORT: f64 = 2.0;

/// `sin t / t`, continuous at zero.
#[inline]
pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// Fourier transform `int keys(t) e^{i lambda t} dt`
/// `= sinc(lambda/2)^3 [3 sinc(lambda/2) - 2 cos(lambda/2)]`.
#[inline]
pub fn keys_kernel_ft(lambda: f64) -> f64 {
    let t = 0.5 * lambda;
    let s = sinc(t);
    s * s * s * (3.0 * s - 2.0 * t.cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Centred cardinal B-spline of degree `n` via the Cox-de Boor style
    /// recursion `B_n(t) = ((t + (n+1)/2) B_{n-1}(t + 1/2) + ((n+1)/2 - t) B_{n-1}(t - 1/2)) / n`.
    fn bspline(n: u32, t: f64) -> f64 {
        if n == 0 {
            return if (-0.5..0.5).contains(&t) { 1.0 } else { 0.0 };
        }
        let h = (n as f64 + 1.0) / 2.0;
        ((t + h) * bspline(n - 1, t + 0.5) + (h - t) * bspline(n - 1, t - 0.5)) / n as f64
    }

    fn keys_oracle(t: f64) -> f64 {
        3.0 * bspline(3, t) - (bspline(2, t - 0.5) + bspline(2, t + 0.5))
    }

    #[test]
    fn bspline_oracle_values() {
        assert!((bspline(3, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((bspline(2, 0.5) - 0.5).abs() < 1e-15);
        assert!((bspline(3, 0.5) - 23.0 / 48.0).abs() < 1e-15);
        assert!((bspline(2, 0.0) - 0.75).abs() < 1e-15);
        assert!((bspline(2, 1.0) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(keys_kernel(0.0), 1.0);
        for t in [-2.0, -1.0, 1.0, 2.0] {
            assert_eq!(keys_kernel(t), 0.0);
        }
        assert!((keys_kernel(0.5) - 0.5625).abs() < 1e-15);
        assert!((keys_oracle(0.5) - 0.5625).abs() < 1e-14);
    }

    #[test]
    fn kernel_matches_bspline_form() {
        for i in -250..=250 {
            let t = i as f64 * 0.01 + 0.0013;
            assert!((keys_kernel(t) - keys_oracle(t)).abs() < 1e-13, "t = {t}");
        }
    }

    #[test]
    fn partition_of_unity() {
        for i in 0..50 {
            let t = i as f64 / 50.0;
            let s: f64 = (-3..=3).map(|k| keys_kernel(t - k as f64)).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn even_kernel_and_transform() {
        for i in 0..100 {
            let t = i as f64 * 0.037;
            assert_eq!(keys_kernel(t), keys_kernel(-t));
            assert_eq!(keys_kernel_ft(3.0 * t), keys_kernel_ft(-3.0 * t));
        }
    }

    #[test]
    fn transform_examples() {
        assert_eq!(keys_kernel_ft(0.0), 1.0);
        assert!(keys_kernel_ft(std::f64::consts::TAU).abs() < 1e-15);
    }

    #[test]
    fn transform_matches_quadrature() {
        // composite Simpson on each polynomial piece of the kernel; the
        // integrand is smooth inside each unit interval
        for lambda in [0.5, 1.0, 3.0] {
            let mut acc = 0.0;
            let per_piece = 2000;
            for k in 0..4 {
                let a = -2.0 + k as f64;
                let h = 1.0 / per_piece as f64;
                let f = |t: f64| keys_kernel(t) * (lambda * t).cos();
                let mut s = f(a) + f(a + 1.0);
                for i in 1..per_piece {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    s += w * f(a + i as f64 * h);
                }
                acc += s * h / 3.0;
            }
            assert!((acc - keys_kernel_ft(lambda)).abs() < 1e-8, "lambda = {lambda}");
        }
    }
}
