//! Matrix-free circular Radon projector over a bilinear image and its exact
//! transpose.
//!
//! Each data node `(alpha, rho)` integrates the bilinear interpolant of the
//! image along the part of the circle `R alpha_vec + rho (cos phi, sin phi)`
//! inside the image rectangle, by the midpoint rule with arc spacing at most
//! `arc_step_factor * pixel`. Sample positions depend only on the node, so
//! the back-projector can replay the same stencil transposed.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Image, ImageGrid, OperatorError};
use crate::data::{DataGrid, Sinogram};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectorSpec {
    pub fine_grid: DataGrid,
    /// Circle centres lie on `|x| = radius`.
    pub radius: f64,
    /// Arc sample spacing relative to the pixel size, in `(0, 1]`.
    pub arc_step_factor: f64,
}

impl ProjectorSpec {
    pub fn new(fine_grid: DataGrid, radius: f64) -> Self {
        Self { fine_grid, radius, arc_step_factor: 0.5 }
    }

    pub fn with_arc_step(mut self, factor: f64) -> Self {
        self.arc_step_factor = factor;
        self
    }
}

/// One arc of a data circle inside the rectangle.
#[derive(Debug, Clone, Copy)]
struct Arc {
    j2: u32,
    count: u32,
    /// Angle of the first midpoint sample.
    phi_first: f64,
    dphi: f64,
    /// Quadrature weight `rho * dphi` of every sample.
    weight: f64,
}

/// Precomputed arc layout for one `(image grid, data grid)` pair.
#[derive(Debug, Clone)]
pub struct Projector {
    spec: ProjectorSpec,
    grid: ImageGrid,
    /// Arcs grouped by `alpha` index: `arcs[row_start[j1]..row_start[j1 + 1]]`.
    arcs: Vec<Arc>,
    row_start: Vec<usize>,
    centers: Vec<Point2>,
}

impl Projector {
    pub fn new(spec: ProjectorSpec, grid: ImageGrid) -> Result<Self, OperatorError> {
        if !(spec.arc_step_factor > 0.0 && spec.arc_step_factor <= 1.0) {
            return Err(OperatorError::InvalidSpec(format!(
                "arc_step_factor {} outside (0, 1]",
                spec.arc_step_factor
            )));
        }
        if grid.max_radius() >= spec.radius {
            return Err(OperatorError::Geometry(format!(
                "image rectangle reaches |x| = {} >= R = {}",
                grid.max_radius(),
                spec.radius
            )));
        }
        let fg = spec.fine_grid;
        let h_max = spec.arc_step_factor * grid.pixel();
        let mut arcs = Vec::new();
        let mut row_start = Vec::with_capacity(fg.n_alpha + 1);
        let mut centers = Vec::with_capacity(fg.n_alpha);
        let mut intervals = Vec::with_capacity(8);
        for j1 in 0..fg.n_alpha {
            row_start.push(arcs.len());
            let c = spec.radius * Point2::unit(fg.alpha(j1));
            centers.push(c);
            for j2 in 0..fg.n_rho {
                let rho = fg.rho(j2);
                inside_intervals(&grid, c, rho, &mut intervals);
                for &(a, b) in &intervals {
                    let len = rho * (b - a);
                    if len <= 0.0 {
                        continue;
                    }
                    let count = (len / h_max).ceil().max(1.0) as u32;
                    let dphi = (b - a) / count as f64;
                    arcs.push(Arc { j2: j2 as u32, count, phi_first: a + 0.5 * dphi, dphi, weight: rho * dphi });
                }
            }
        }
        row_start.push(arcs.len());
        Ok(Self { spec, grid, arcs, row_start, centers })
    }

    pub fn spec(&self) -> &ProjectorSpec {
        &self.spec
    }

    pub fn image_grid(&self) -> &ImageGrid {
        &self.grid
    }

    pub fn data_grid(&self) -> &DataGrid {
        &self.spec.fine_grid
    }

    /// Total number of arc samples, a proxy for the cost of one application.
    pub fn sample_count(&self) -> usize {
        self.arcs.iter().map(|a| a.count as usize).sum()
    }

    /// Visits every sample of one arc as `(stencil offsets, weights)`; the
    /// weights include the arc quadrature weight.
    #[inline]
    fn for_each_sample(&self, center: Point2, rho: f64, arc: &Arc, mut visit: impl FnMut([usize; 4], [f64; 4])) {
        let g = &self.grid;
        let inv_h = 1.0 / g.pixel();
        let n = g.n;
        let top = (n - 1) as f64;
        let (mut s, mut c) = arc.phi_first.sin_cos();
        let (ds, dc) = arc.dphi.sin_cos();
        let u0 = (center.x1 - g.x_lo) * inv_h;
        let v0 = (center.x2 - g.y_lo) * inv_h;
        let r = rho * inv_h;
        for _ in 0..arc.count {
            let u = u0 + r * c;
            let v = v0 + r * s;
            if u >= 0.0 && u <= top && v >= 0.0 && v <= top {
                let i = (u as usize).min(n - 2);
                let k = (v as usize).min(n - 2);
                let fu = u - i as f64;
                let fv = v - k as f64;
                let o = k * n + i;
                let w = arc.weight;
                visit(
                    [o, o + 1, o + n, o + n + 1],
                    [
                        w * (1.0 - fu) * (1.0 - fv),
                        w * fu * (1.0 - fv),
                        w * (1.0 - fu) * fv,
                        w * fu * fv,
                    ],
                );
            }
            let c_next = c * dc - s * ds;
            s = s * dc + c * ds;
            c = c_next;
        }
    }

    pub fn forward(&self, img: &Image) -> Result<Sinogram, OperatorError> {
        if img.grid != self.grid {
            return Err(OperatorError::GridMismatch);
        }
        let fg = self.spec.fine_grid;
        let mut out = Sinogram::zeros(fg);
        let f = &img.values;
        out.values.par_chunks_mut(fg.n_rho).enumerate().for_each(|(j1, row)| {
            let center = self.centers[j1];
            for arc in &self.arcs[self.row_start[j1]..self.row_start[j1 + 1]] {
                let rho = fg.rho(arc.j2 as usize);
                let mut acc = 0.0;
                self.for_each_sample(center, rho, arc, |o, w| {
                    acc += w[0] * f[o[0]] + w[1] * f[o[1]] + w[2] * f[o[2]] + w[3] * f[o[3]];
                });
                row[arc.j2 as usize] += acc;
            }
        });
        Ok(out)
    }

    /// Transpose of [`Self::forward`] with respect to the quadrature-weighted
    /// inner products on data (`d_alpha d_rho`) and image (`pixel^2`).
    pub fn back(&self, sino: &Sinogram) -> Result<Image, OperatorError> {
        let fg = self.spec.fine_grid;
        if !sino.grid.same_as(&fg) {
            return Err(OperatorError::GridMismatch);
        }
        let mut out = Image::zeros(self.grid);
        let h = self.grid.pixel();
        let scale = fg.cell_area() / (h * h);
        let acc = &mut out.values;
        for j1 in 0..fg.n_alpha {
            let center = self.centers[j1];
            let row = sino.row(j1);
            for arc in &self.arcs[self.row_start[j1]..self.row_start[j1 + 1]] {
                let g = row[arc.j2 as usize];
                if g == 0.0 {
                    continue;
                }
                let rho = fg.rho(arc.j2 as usize);
                let gs = g * scale;
                self.for_each_sample(center, rho, arc, |o, w| {
                    acc[o[0]] += gs * w[0];
                    acc[o[1]] += gs * w[1];
                    acc[o[2]] += gs * w[2];
                    acc[o[3]] += gs * w[3];
                });
            }
        }
        Ok(out)
    }

    /// One pass computing `r = R v - g` and `R* r` together; each arc is
    /// gathered and then scattered while its samples are still cached.
    pub fn normal_residual(&self, v: &Image, g: Option<&Sinogram>) -> Result<(Sinogram, Image), OperatorError> {
        if v.grid != self.grid {
            return Err(OperatorError::GridMismatch);
        }
        let fg = self.spec.fine_grid;
        if let Some(g) = g {
            if !g.grid.same_as(&fg) {
                return Err(OperatorError::GridMismatch);
            }
        }
        let mut resid = match g {
            Some(g) => {
                let mut r = g.clone();
                r.scale(-1.0);
                r
            }
            None => Sinogram::zeros(fg),
        };
        let mut out = Image::zeros(self.grid);
        let h = self.grid.pixel();
        let scale = fg.cell_area() / (h * h);
        let f = &v.values;
        let acc = &mut out.values;
        let mut offs: Vec<[usize; 4]> = Vec::new();
        let mut wts: Vec<[f64; 4]> = Vec::new();
        for j1 in 0..fg.n_alpha {
            let center = self.centers[j1];
            let row = &mut resid.values[j1 * fg.n_rho..(j1 + 1) * fg.n_rho];
            let arcs = &self.arcs[self.row_start[j1]..self.row_start[j1 + 1]];
            // arcs of one node are stored next to each other
            for group in arcs.chunk_by(|a, b| a.j2 == b.j2) {
                let j2 = group[0].j2 as usize;
                let rho = fg.rho(j2);
                offs.clear();
                wts.clear();
                let mut sum = 0.0;
                for arc in group {
                    self.for_each_sample(center, rho, arc, |o, w| {
                        sum += w[0] * f[o[0]] + w[1] * f[o[1]] + w[2] * f[o[2]] + w[3] * f[o[3]];
                        offs.push(o);
                        wts.push(w);
                    });
                }
                row[j2] += sum;
                let rs = row[j2] * scale;
                if rs == 0.0 {
                    continue;
                }
                for (o, w) in offs.iter().zip(&wts) {
                    acc[o[0]] += rs * w[0];
                    acc[o[1]] += rs * w[1];
                    acc[o[2]] += rs * w[2];
                    acc[o[3]] += rs * w[3];
                }
            }
        }
        Ok((resid, out))
    }
}

/// Angular intervals `[a, b]` (with `b` possibly beyond `2 pi`) on which the
/// circle of radius `rho` about `c` lies inside the rectangle.
fn inside_intervals(grid: &ImageGrid, c: Point2, rho: f64, out: &mut Vec<(f64, f64)>) {
    out.clear();
    let mut cuts: Vec<f64> = Vec::with_capacity(8);
    let mut push_pair = |base: f64, mirror: bool| {
        let (a, b) = if mirror { (base, std::f64::consts::PI - base) } else { (base, -base) };
        cuts.push(a.rem_euclid(TAU));
        cuts.push(b.rem_euclid(TAU));
    };
    for edge in [grid.x_lo, grid.x_hi] {
        let t = (edge - c.x1) / rho;
        if t.abs() <= 1.0 {
            push_pair(t.acos(), false);
        }
    }
    for edge in [grid.y_lo, grid.y_hi] {
        let t = (edge - c.x2) / rho;
        if t.abs() <= 1.0 {
            push_pair(t.asin(), true);
        }
    }
    let inside = |phi: f64| {
        let p = c + rho * Point2::unit(phi);
        p.x1 > grid.x_lo && p.x1 < grid.x_hi && p.x2 > grid.y_lo && p.x2 < grid.y_hi
    };
    if cuts.is_empty() {
        if inside(0.0) {
            out.push((0.0, TAU));
        }
        return;
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let m = cuts.len();
    for idx in 0..m {
        let a = cuts[idx];
        let b = if idx + 1 < m { cuts[idx + 1] } else { cuts[0] + TAU };
        if b - a <= 0.0 {
            continue;
        }
        if inside(0.5 * (a + b)) {
            // merge with the previous kept interval when contiguous
            if let Some(last) = out.last_mut() {
                if (last.1 - a).abs() < 1e-15 {
                    last.1 = b;
                    continue;
                }
            }
            out.push((a, b));
        }
    }
}

pub fn forward_project(img: &Image, spec: &ProjectorSpec) -> Result<Sinogram, OperatorError> {
    Projector::new(*spec, img.grid)?.forward(img)
}

pub fn back_project(sino: &Sinogram, grid: &ImageGrid, spec: &ProjectorSpec) -> Result<Image, OperatorError> {
    Projector::new(*spec, *grid)?.back(sino)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DiskPhantom;

    fn setup(n: usize) -> (ImageGrid, ProjectorSpec) {
        let grid = ImageGrid::centered_square(3.7, n).unwrap();
        let fine = DataGrid::build(60, 91, 10.0, 3.7).unwrap();
        (grid, ProjectorSpec::new(fine, 10.0))
    }

    fn lcg_image(grid: ImageGrid, seed: u64) -> Image {
        let mut s = seed.wrapping_add(0x9E3779B97F4A7C15);
        let mut img = Image::from_fn(grid, |_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        img.zero_boundary();
        img
    }

    #[test]
    fn zero_in_zero_out() {
        let (grid, spec) = setup(41);
        let p = Projector::new(spec, grid).unwrap();
        let s = p.forward(&Image::zeros(grid)).unwrap();
        assert!(s.values.iter().all(|&v| v == 0.0));
        let b = p.back(&Sinogram::zeros(spec.fine_grid)).unwrap();
        assert!(b.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_is_homogeneous() {
        let (grid, spec) = setup(41);
        let p = Projector::new(spec, grid).unwrap();
        let f = lcg_image(grid, 4);
        let mut f2 = f.clone();
        f2.scale(2.0);
        let a = p.forward(&f).unwrap();
        let b = p.forward(&f2).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn adjoint_identity() {
        let (grid, spec) = setup(41);
        let p = Projector::new(spec, grid).unwrap();
        let f = lcg_image(grid, 1);
        let mut s = 77u64;
        let g = Sinogram::from_fn(spec.fine_grid, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        });
        let rf = p.forward(&f).unwrap();
        let lhs = rf.dot(&g);
        let rhs = f.dot(&p.back(&g).unwrap());
        let scale = rf.norm_sq().sqrt() * g.norm_sq().sqrt();
        assert!((lhs - rhs).abs() / scale < 1e-12);
    }

    #[test]
    fn fused_pass_matches_separate_passes() {
        let (grid, spec) = setup(41);
        let p = Projector::new(spec, grid).unwrap();
        let f = lcg_image(grid, 9);
        let g = Sinogram::from_fn(spec.fine_grid, |a, r| ((a * 7 + r * 3) % 11) as f64 - 5.0);
        let mut r = p.forward(&f).unwrap();
        r.axpy(-1.0, &g);
        let back = p.back(&r).unwrap();
        let (r2, back2) = p.normal_residual(&f, Some(&g)).unwrap();
        for (a, b) in r.values.iter().zip(&r2.values) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(back.sup_diff(&back2) < 1e-10 * back.max_abs());
    }

    #[test]
    fn impulse_backprojects_near_circle() {
        let (grid, spec) = setup(81);
        let p = Projector::new(spec, grid).unwrap();
        let mut g = Sinogram::zeros(spec.fine_grid);
        let (j1, j2) = (7, 45);
        g.set(j1, j2, 1.0);
        let img = p.back(&g).unwrap();
        let c = 10.0 * Point2::unit(spec.fine_grid.alpha(j1));
        let rho = spec.fine_grid.rho(j2);
        let h = grid.pixel();
        let mut nonzero = 0;
        for k in 0..grid.n {
            for i in 0..grid.n {
                if img.get(i, k) != 0.0 {
                    nonzero += 1;
                    let d = ((grid.point(i, k) - c).norm() - rho).abs();
                    assert!(d < 1.5 * h, "pixel ({i},{k}) off the circle by {d}");
                }
            }
        }
        assert!(nonzero > 0);
    }

    #[test]
    fn disk_matches_analytic_arc_length() {
        let grid = ImageGrid::centered_square(3.7, 201).unwrap();
        let fine = DataGrid::build(90, 121, 10.0, 3.7).unwrap();
        let spec = ProjectorSpec::new(fine, 10.0);
        let phantom = DiskPhantom::default();
        let img = Image::from_fn(grid, |x| if phantom.contains(x) { 1.0 } else { 0.0 });
        let s = forward_project(&img, &spec).unwrap();
        let exact = crate::data::disk_data(&fine, &phantom, 10.0);
        let cut = 0.1 * exact.max_abs();
        let (mut num, mut den) = (0.0, 0.0);
        for (a, b) in s.values.iter().zip(&exact.values) {
            if *b > cut {
                num += (a - b).powi(2);
                den += b * b;
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel < 0.02, "relative L2 error {rel}");
    }

    #[test]
    fn intervals_cover_full_circle_inside() {
        let grid = ImageGrid::centered_square(3.0, 11).unwrap();
        let mut out = Vec::new();
        inside_intervals(&grid, Point2::new(0.5, 0.0), 1.0, &mut out);
        assert_eq!(out, vec![(0.0, TAU)]);
        inside_intervals(&grid, Point2::new(10.0, 0.0), 1.0, &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn intervals_match_brute_force_length() {
        let grid = ImageGrid::new(1.0, 1.4, 0.5, 0.9, 11).unwrap();
        let mut out = Vec::new();
        for (alpha, rho) in [(2.0944, 10.0933), (2.0, 10.2), (0.3, 8.9), (4.0, 10.7)] {
            let c = 10.0 * Point2::unit(alpha);
            inside_intervals(&grid, c, rho, &mut out);
            let got: f64 = out.iter().map(|(a, b)| b - a).sum();
            let m = 400_000;
            let hits = (0..m)
                .filter(|&k| grid.contains(c + rho * Point2::unit((k as f64 + 0.5) * TAU / m as f64)))
                .count();
            let brute = hits as f64 * TAU / m as f64;
            assert!((got - brute).abs() < 1e-4, "{got} vs {brute}");
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        let grid = ImageGrid::centered_square(8.0, 11).unwrap();
        let fine = DataGrid::build(20, 21, 10.0, 3.7).unwrap();
        assert!(Projector::new(ProjectorSpec::new(fine, 10.0), grid).is_err());
        let grid = ImageGrid::centered_square(3.0, 11).unwrap();
        assert!(Projector::new(ProjectorSpec::new(fine, 10.0).with_arc_step(0.0), grid).is_err());
    }
}
