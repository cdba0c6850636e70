use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::geometry::{DataPoint, Point2};

/// Indicator function of a disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPhantom {
    pub center: Point2,
    pub radius: f64,
}

impl Default for DiskPhantom {
    fn default() -> Self {
        Self { center: Point2::new(1.0, 1.0), radius: 2.0 }
    }
}

impl DiskPhantom {
    pub fn new(center: Point2, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn contains(&self, x: Point2) -> bool {
        (x - self.center).norm() < self.radius
    }

    /// Disk fits inside the open square `(-half, half)^2`.
    pub fn inside_square(&self, half: f64) -> bool {
        self.center.x1.abs() + self.radius < half && self.center.x2.abs() + self.radius < half
    }

    fn center_distance(&self, radius: f64, y: DataPoint) -> f64 {
        (radius * Point2::unit(y.alpha) - self.center).norm()
    }

    /// Whether the circle `sigma_y` (centre `R alpha_vec`, radius `rho`)
    /// meets the open disk.
    pub fn circle_meets(&self, radius: f64, y: DataPoint) -> bool {
        let d = self.center_distance(radius, y);
        d < y.rho + self.radius && y.rho < d + self.radius
    }

    /// Exact circular Radon transform of the indicator: the arc length of
    /// `sigma_y` inside the disk.
    pub fn forward_disk(&self, radius: f64, y: DataPoint) -> f64 {
        let rho = y.rho;
        let r = self.radius;
        let d = self.center_distance(radius, y);
        if d >= rho + r || rho >= d + r {
            return 0.0;
        }
        if d + rho <= r {
            return TAU * rho;
        }
        let c = ((d * d + rho * rho - r * r) / (2.0 * d * rho)).clamp(-1.0, 1.0);
        2.0 * rho * c.acos()
    }
}
