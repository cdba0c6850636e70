//! Circular generalized Radon transform geometry and the classical Radon
//! transform used as a cross-check instance.
//!
//! The circular family integrates over circles of radius `rho` centred at
//! `R * (cos alpha, sin alpha)`. The classical family integrates over lines
//! `alpha_vec . x = p`. Both carry the constant weight `W = 1` and share the
//! principal symbol `Q0 = 4 pi`.

use std::f64::consts::{PI, TAU};
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point ({x1}, {x2}) lies outside the open disk of radius {radius}")]
    OutsideDisk { x1: f64, x2: f64, radius: f64 },
    #[error("covector has zero length")]
    DegenerateCovector,
    #[error("non-finite input")]
    NonFinite,
    #[error("invalid model parameter: {0}")]
    InvalidModel(String),
    #[error("symbol parameter must be positive, got {0}")]
    NonPositiveKappa(f64),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x1: f64,
    pub x2: f64,
}

impl Point2 {
    pub const ZERO: Point2 = Point2 { x1: 0.0, x2: 0.0 };

    pub const fn new(x1: f64, x2: f64) -> Self {
        Self { x1, x2 }
    }

    /// Unit vector `(cos a, sin a)`.
    pub fn unit(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c, s)
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x1 * other.x1 + self.x2 * other.x2
    }

    /// 2-D cross product `self x other`.
    pub fn cross(self, other: Point2) -> f64 {
        self.x1 * other.x2 - self.x2 * other.x1
    }

    pub fn norm(self) -> f64 {
        self.x1.hypot(self.x2)
    }

    /// Rotation by +90 degrees: `(x1, x2) -> (-x2, x1)`.
    pub fn perp(self) -> Self {
        Self::new(-self.x2, self.x1)
    }

    pub fn is_finite(self) -> bool {
        self.x1.is_finite() && self.x2.is_finite()
    }

    pub fn angle(self) -> f64 {
        self.x2.atan2(self.x1)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 + rhs.x1, self.x2 + rhs.x2)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x1 - rhs.x1, self.x2 - rhs.x2)
    }
}

impl Mul<Point2> for f64 {
    type Output = Point2;
    fn mul(self, rhs: Point2) -> Point2 {
        Point2::new(self * rhs.x1, self * rhs.x2)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x1, -self.x2)
    }
}

/// Wraps an angle into `[0, 2 pi)`.
pub fn wrap_angle(alpha: f64) -> f64 {
    let a = alpha.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// A data point `y = (alpha, rho)`; `rho` plays the role of `p` for the
/// classical model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub alpha: f64,
    pub rho: f64,
}

impl DataPoint {
    pub fn new(alpha: f64, rho: f64) -> Self {
        Self { alpha: wrap_angle(alpha), rho }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GrtModel {
    /// Circles of radius `rho` centred at `radius * alpha_vec`.
    Circular { radius: f64 },
    /// Lines `alpha_vec . x = p`.
    ClassicalRadon,
}

impl Default for GrtModel {
    fn default() -> Self {
        GrtModel::Circular { radius: 10.0 }
    }
}

/// The two data points whose curves pass through `x` with conormal parallel
/// to a given covector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSolution {
    pub entries: [DataPoint; 2],
}

impl GrtModel {
    pub fn circular(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidModel(format!("radius {radius}")));
        }
        Ok(GrtModel::Circular { radius })
    }

    /// Integration weight `W(x, y)`; constant for both families.
    pub fn weight(&self) -> f64 {
        1.0
    }

    fn check(&self, x: Point2) -> Result<()> {
        if !x.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if let GrtModel::Circular { radius } = *self {
            if x.norm() >= radius {
                return Err(GeometryError::OutsideDisk { x1: x.x1, x2: x.x2, radius });
            }
        }
        Ok(())
    }

    /// Defining function `Phi(x, alpha)`.
    pub fn phi(&self, x: Point2, alpha: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match *self {
            GrtModel::Circular { radius } => (x - radius * Point2::unit(alpha)).norm(),
            GrtModel::ClassicalRadon => Point2::unit(alpha).dot(x),
        })
    }

    /// `d_x Phi(x, alpha)`; the unit vector `Theta` for circles.
    pub fn grad_x_phi(&self, x: Point2, alpha: f64) -> Result<Point2> {
        self.check(x)?;
        Ok(match *self {
            GrtModel::Circular { radius } => {
                let d = x - radius * Point2::unit(alpha);
                (1.0 / d.norm()) * d
            }
            GrtModel::ClassicalRadon => Point2::unit(alpha),
        })
    }

    /// `d Phi / d alpha`.
    ///
    /// For circles this is `-R Theta . alpha_perp`; its magnitude is the
    /// distance from the origin to the chord through `x` and `R alpha_vec`.
    pub fn phi_alpha_prime(&self, x: Point2, alpha: f64) -> Result<f64> {
        let theta = self.grad_x_phi(x, alpha)?;
        Ok(match *self {
            GrtModel::Circular { radius } => -radius * theta.dot(Point2::unit(alpha).perp()),
            GrtModel::ClassicalRadon => Point2::unit(alpha).perp().dot(x),
        })
    }

    /// Gradient in `x` of `Phi'_alpha`.
    fn grad_x_phi_alpha_prime(&self, x: Point2, alpha: f64) -> Result<Point2> {
        self.check(x)?;
        Ok(match *self {
            GrtModel::Circular { radius } => {
                let d = x - radius * Point2::unit(alpha);
                let dist = d.norm();
                let theta = (1.0 / dist) * d;
                let aperp = Point2::unit(alpha).perp();
                // d_x Theta = (I - Theta Theta^T) / |x - R alpha_vec|
                let proj = aperp - theta.dot(aperp) * theta;
                (-radius / dist) * proj
            }
            GrtModel::ClassicalRadon => Point2::unit(alpha).perp(),
        })
    }

    /// Distance from the origin to the chord of `|x| = R` through `x` and
    /// `R alpha_vec`. Evaluated as `|R alpha_vec . Theta_perp|`; for the
    /// classical model it is `|alpha_perp . x|`.
    pub fn chord_distance(&self, x: Point2, alpha: f64) -> Result<f64> {
        match *self {
            GrtModel::Circular { radius } => {
                let theta = self.grad_x_phi(x, alpha)?;
                Ok((radius * Point2::unit(alpha).dot(theta.perp())).abs())
            }
            GrtModel::ClassicalRadon => Ok(self.phi_alpha_prime(x, alpha)?.abs()),
        }
    }

    /// `Delta_Phi = det [d_x Phi ; d_x Phi'_alpha]`.
    pub fn delta_phi(&self, x: Point2, alpha: f64) -> Result<f64> {
        let row1 = self.grad_x_phi(x, alpha)?;
        let row2 = self.grad_x_phi_alpha_prime(x, alpha)?;
        Ok(row1.cross(row2))
    }

    /// Solves `p = Phi(x, alpha)`, `xi = -nu d_x Phi(x, alpha)` for the two
    /// data points seeing `(x, xi)`.
    pub fn dual_points(&self, x: Point2, xi: Point2) -> Result<DualSolution> {
        self.check(x)?;
        if !xi.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        let len = xi.norm();
        if len == 0.0 {
            return Err(GeometryError::DegenerateCovector);
        }
        let dir = (1.0 / len) * xi;
        match *self {
            GrtModel::Circular { radius } => {
                // |x + t dir|^2 = R^2  =>  t = -(x.dir) +- sqrt(R^2 - |x_perp|^2)
                let along = x.dot(dir);
                let off = x - along * dir;
                let disc = (radius * radius - off.dot(off)).sqrt();
                let ts = [-along + disc, -along - disc];
                let entries = ts.map(|t| {
                    let hit = x + t * dir;
                    let alpha = hit.angle();
                    DataPoint::new(alpha, (x - radius * Point2::unit(alpha)).norm())
                });
                Ok(DualSolution { entries })
            }
            GrtModel::ClassicalRadon => {
                let a = dir.angle();
                let entries = [a, a + PI].map(|alpha| {
                    DataPoint::new(alpha, Point2::unit(alpha).dot(x))
                });
                Ok(DualSolution { entries })
            }
        }
    }

    /// Principal symbol `Q0(x, xi) = 2 pi sum_k |d_x Phi| W^2 / |Delta_Phi|`
    /// over the dual points.
    pub fn q0(&self, x: Point2, xi: Point2) -> Result<f64> {
        let dual = self.dual_points(x, xi)?;
        let w = self.weight();
        let mut total = 0.0;
        for y in dual.entries {
            let grad = self.grad_x_phi(x, y.alpha)?.norm();
            let det = self.delta_phi(x, y.alpha)?.abs();
            total += grad * w * w / det;
        }
        Ok(TAU * total)
    }

    /// Regularized symbol `|xi| / (Q0 + kappa |xi|^3)`.
    pub fn b0_symbol(&self, x: Point2, xi: Point2, kappa: f64) -> Result<f64> {
        if !(kappa > 0.0) {
            return Err(GeometryError::NonPositiveKappa(kappa));
        }
        let q = self.q0(x, xi)?;
        let len = xi.norm();
        Ok(len / (q + kappa * len.powi(3)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CIRC: GrtModel = GrtModel::Circular { radius: 10.0 };
    const X: Point2 = Point2::new(1.2, 0.7);

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn phi_examples() {
        assert_eq!(CIRC.phi(Point2::ZERO, 0.0).unwrap(), 10.0);
        let alpha = 100.0 * TAU / 300.0;
        let direct = ((1.2 - 10.0 * alpha.cos()).powi(2) + (0.7 - 10.0 * alpha.sin()).powi(2)).sqrt();
        let v = CIRC.phi(X, alpha).unwrap();
        assert!(close(v, direct, 1e-14));
        // the impulse node rho_229 = 10.0930 is the grid value nearest to phi
        let rho_229 = 10.0 - 3.7 * 2f64.sqrt() + 229.0 * (2.0 * 3.7 * 2f64.sqrt() / 450.0);
        assert!(close(v, 10.08988, 1e-5), "{v}");
        assert!((v - rho_229).abs() < 0.5 * 0.0232560);
        assert_eq!(GrtModel::ClassicalRadon.phi(Point2::new(3.0, 4.0), 0.0).unwrap(), 3.0);
    }

    #[test]
    fn phi_rejects_outside() {
        assert!(matches!(
            CIRC.phi(Point2::new(10.0, 0.0), 0.0),
            Err(GeometryError::OutsideDisk { .. })
        ));
        assert!(CIRC.phi(Point2::new(f64::NAN, 0.0), 0.0).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = CIRC.grad_x_phi(Point2::ZERO, 0.0).unwrap();
        assert!(close(g.x1, -1.0, 1e-15) && close(g.x2, 0.0, 1e-15));
        let g = GrtModel::ClassicalRadon.grad_x_phi(X, PI / 2.0).unwrap();
        assert!(close(g.x1, 0.0, 1e-15) && close(g.x2, 1.0, 1e-15));
    }

    #[test]
    fn alpha_derivative_examples() {
        assert!(close(CIRC.phi_alpha_prime(Point2::ZERO, 1.3).unwrap(), 0.0, 1e-14));
        let v = GrtModel::ClassicalRadon.phi_alpha_prime(Point2::new(3.0, 4.0), 0.0).unwrap();
        assert!(close(v, 4.0, 1e-15));
        // point-to-line distance oracle for the chord through x and R alpha_vec
        let alpha = 2.0944;
        let c = 10.0 * Point2::unit(alpha);
        let d = X - c;
        let line_dist = (c.x1 * d.x2 - c.x2 * d.x1).abs() / d.norm();
        let v = CIRC.phi_alpha_prime(X, alpha).unwrap();
        assert!(close(v.abs(), line_dist, 1e-12));
        assert!(close(CIRC.chord_distance(X, alpha).unwrap(), line_dist, 1e-12));
    }

    #[test]
    fn chord_distance_radial() {
        assert!(CIRC.chord_distance(Point2::ZERO, 0.7).unwrap() < 1e-14);
        let alpha = 0.7;
        let x = 3.3 * Point2::unit(alpha);
        assert!(CIRC.chord_distance(x, alpha).unwrap() < 1e-13);
    }

    #[test]
    fn delta_phi_examples() {
        assert!(close(GrtModel::ClassicalRadon.delta_phi(X, 0.4).unwrap(), 1.0, 1e-15));
        assert!(close(CIRC.delta_phi(Point2::ZERO, 0.0).unwrap().abs(), 1.0, 1e-14));
        // closed-form oracle R |alpha_vec . Theta| / |x - R alpha_vec|
        for &alpha in &[0.1, 1.0, 2.0944, 4.0, 5.9] {
            let theta = CIRC.grad_x_phi(X, alpha).unwrap();
            let expect = 10.0 * Point2::unit(alpha).dot(theta).abs() / CIRC.phi(X, alpha).unwrap();
            assert!(close(CIRC.delta_phi(X, alpha).unwrap().abs(), expect, 1e-13));
        }
    }

    #[test]
    fn dual_points_through_center() {
        let d = CIRC.dual_points(Point2::ZERO, Point2::new(1.0, 0.0)).unwrap();
        assert!(close(d.entries[0].alpha, 0.0, 1e-14));
        assert!(close(d.entries[1].alpha, PI, 1e-14));
        for e in d.entries {
            assert!(close(e.rho, 10.0, 1e-13));
        }
        let d = CIRC.dual_points(Point2::ZERO, Point2::new(-0.3, 2.0)).unwrap();
        assert!(d.entries.iter().all(|e| close(e.rho, 10.0, 1e-13)));
    }

    #[test]
    fn dual_points_residuals() {
        let xi = Point2::new(0.0, 1.0);
        let d = CIRC.dual_points(X, xi).unwrap();
        for e in d.entries {
            assert!((CIRC.phi(X, e.alpha).unwrap() - e.rho).abs() < 1e-12);
            let g = CIRC.grad_x_phi(X, e.alpha).unwrap();
            assert!(g.cross(xi).abs() / xi.norm() < 1e-12);
        }
    }

    #[test]
    fn dual_points_degenerate() {
        assert_eq!(
            CIRC.dual_points(X, Point2::ZERO).unwrap_err(),
            GeometryError::DegenerateCovector
        );
    }

    #[test]
    fn q0_is_four_pi() {
        assert!(close(CIRC.q0(X, Point2::new(0.3, -0.8)).unwrap(), 4.0 * PI, 1e-10));
        assert!(close(CIRC.q0(Point2::ZERO, Point2::new(0.5, 0.5)).unwrap(), 4.0 * PI, 1e-12));
        assert_eq!(GrtModel::ClassicalRadon.q0(X, Point2::new(0.3, -0.8)).unwrap(), 4.0 * PI);
    }

    #[test]
    fn b0_examples() {
        let k = 0.5;
        let v = CIRC.b0_symbol(X, Point2::new(1.0, 0.0), k).unwrap();
        assert!(close(v, 1.0 / (4.0 * PI + 0.5), 1e-12));
        assert!(close(v, 0.076532, 1e-6));
        let v = CIRC.b0_symbol(X, Point2::new(0.0, 10.0), k).unwrap();
        assert!(close(v, 10.0 / (4.0 * PI + 500.0), 1e-12));
        assert!(close(v, 0.01951, 1e-5));
        let tiny = CIRC.b0_symbol(X, Point2::new(1e-9, 0.0), k).unwrap();
        assert!(tiny < 1e-9);
        assert!(CIRC.b0_symbol(X, Point2::ZERO, k).is_err());
        assert!(CIRC.b0_symbol(X, Point2::new(1.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(-1e-300), 0.0);
        assert!(close(wrap_angle(-PI / 2.0), 1.5 * PI, 1e-15));
        assert!(close(wrap_angle(7.0), 7.0 - TAU, 1e-15));
    }
}
