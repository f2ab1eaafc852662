//! Uniform-grid heightfields.
//!
//! A [`HeightField`] stores elevations at cell centres on an `nx` by `ny` grid
//! (row-major, rows along `y`). Sampling is bilinear between cell centres, so
//! the sampleable domain is the hull of the cell centres, not the outer cell
//! edges. Local patches ([`LocalPatch`]) are square, rotated sub-grids taken
//! with [`HeightField::cutout`] and written back with [`HeightField::replace`].

mod io;
mod pile;
mod settle;

use serde::{Deserialize, Serialize};

use crate::geometry::Pose;
use crate::{Error, Result};

pub use io::{read_csv, read_hfld, write_csv, write_hfld, HFLD_MAGIC, HFLD_VERSION};
pub use pile::{generate_pile, PileSpec};
pub use settle::SettleOptions;

/// Sub-cell offsets closer than this to a grid node are snapped onto it, so
/// that grid-aligned resampling is exact.
const SNAP: f64 = 1e-9;
const BOUNDS_TOL: f64 = 1e-9;

/// Grid geometry of a [`HeightField`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldDims {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "cell_m")]
    pub cell: f64,
    /// World coordinates of the centre of cell (0, 0).
    #[serde(rename = "origin_m")]
    pub origin: [f64; 2],
}

impl FieldDims {
    pub fn new(nx: usize, ny: usize, cell: f64, origin: [f64; 2]) -> Result<Self> {
        let dims = Self {
            nx,
            ny,
            cell,
            origin,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::invalid(format!(
                "heightfield needs at least 2x2 cells, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.cell > 0.0 && self.cell.is_finite()) {
            return Err(Error::invalid(format!("cell size must be positive, got {}", self.cell)));
        }
        if !(self.origin[0].is_finite() && self.origin[1].is_finite()) {
            return Err(Error::invalid("heightfield origin must be finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(x_min, x_max, y_min, y_max)` of the cell-centre hull.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.origin[0],
            self.origin[0] + (self.nx - 1) as f64 * self.cell,
            self.origin[1],
            self.origin[1] + (self.ny - 1) as f64 * self.cell,
        )
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.cell,
            self.origin[1] + j as f64 * self.cell,
        ]
    }

    /// Continuous grid coordinates of a world point.
    pub(crate) fn grid_coords(&self, x: f64, y: f64) -> (f64, f64) {
        (
            snap((x - self.origin[0]) / self.cell),
            snap((y - self.origin[1]) / self.cell),
        )
    }
}

fn snap(f: f64) -> f64 {
    let r = f.round();
    if (f - r).abs() < SNAP {
        r
    } else {
        f
    }
}

/// Bilinear interpolation on a row-major grid at continuous grid coordinates.
/// Coordinates must already be within `[0, nx-1] x [0, ny-1]`.
#[inline]
fn bilinear(data: &[f64], nx: usize, ny: usize, fx: f64, fy: f64) -> f64 {
    let i0 = (fx.floor() as usize).min(nx - 2);
    let j0 = (fy.floor() as usize).min(ny - 2);
    let tx = fx - i0 as f64;
    let ty = fy - j0 as f64;
    let k = j0 * nx + i0;
    let h00 = data[k];
    let h10 = data[k + 1];
    let h01 = data[k + nx];
    let h11 = data[k + nx + 1];
    (h00 * (1.0 - tx) + h10 * tx) * (1.0 - ty) + (h01 * (1.0 - tx) + h11 * tx) * ty
}

/// Global pile state: elevations on a uniform grid.
///
/// Immutable once built; every operation returns a new field.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    dims: FieldDims,
    heights: Vec<f64>,
}

impl HeightField {
    pub fn new(dims: FieldDims, heights: Vec<f64>) -> Result<Self> {
        dims.validate()?;
        if heights.len() != dims.len() {
            return Err(Error::invalid(format!(
                "expected {} heights for a {}x{} grid, got {}",
                dims.len(),
                dims.nx,
                dims.ny,
                heights.len()
            )));
        }
        if let Some(k) = heights.iter().position(|h| !h.is_finite()) {
            return Err(Error::invalid(format!("non-finite height at index {k}")));
        }
        Ok(Self { dims, heights })
    }

    pub fn constant(dims: FieldDims, height: f64) -> Result<Self> {
        Self::new(dims, vec![height; dims.len()])
    }

    /// Builds a field by evaluating `f(x, y)` at every cell centre.
    pub fn from_fn(dims: FieldDims, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        dims.validate()?;
        let mut heights = Vec::with_capacity(dims.len());
        for j in 0..dims.ny {
            for i in 0..dims.nx {
                let [x, y] = dims.cell_center(i, j);
                heights.push(f(x, y));
            }
        }
        Self::new(dims, heights)
    }

    pub fn dims(&self) -> &FieldDims {
        &self.dims
    }

    pub fn nx(&self) -> usize {
        self.dims.nx
    }

    pub fn ny(&self) -> usize {
        self.dims.ny
    }

    pub fn cell(&self) -> f64 {
        self.dims.cell
    }

    pub fn origin(&self) -> [f64; 2] {
        self.dims.origin
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn into_heights(self) -> Vec<f64> {
        self.heights
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.heights[j * self.dims.nx + i]
    }

    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        self.dims.bounds()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (x0, x1, y0, y1) = self.bounds();
        x >= x0 - BOUNDS_TOL && x <= x1 + BOUNDS_TOL && y >= y0 - BOUNDS_TOL && y <= y1 + BOUNDS_TOL
    }

    fn out_of_bounds(&self, x: f64, y: f64) -> Error {
        let (x_min, x_max, y_min, y_max) = self.bounds();
        Error::OutOfBounds {
            x,
            y,
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Bilinear elevation at a world point.
    pub fn sample(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) {
            return Err(self.out_of_bounds(x, y));
        }
        Ok(self.sample_unchecked(x, y))
    }

    /// Like [`HeightField::sample`] but clamps to the hull instead of failing.
    pub(crate) fn sample_unchecked(&self, x: f64, y: f64) -> f64 {
        let (fx, fy) = self.dims.grid_coords(x, y);
        let fx = fx.clamp(0.0, (self.dims.nx - 1) as f64);
        let fy = fy.clamp(0.0, (self.dims.ny - 1) as f64);
        bilinear(&self.heights, self.dims.nx, self.dims.ny, fx, fy)
    }

    /// Total soil volume above elevation zero (m^3).
    pub fn volume(&self) -> f64 {
        self.heights.iter().sum::<f64>() * self.dims.cell * self.dims.cell
    }

    /// Largest height difference to any 8-neighbour divided by the
    /// neighbour distance.
    pub fn max_slope(&self) -> f64 {
        let FieldDims { nx, ny, cell, .. } = self.dims;
        let diag = cell * std::f64::consts::SQRT_2;
        let mut worst = 0.0f64;
        for j in 0..ny {
            for i in 0..nx {
                let h = self.heights[j * nx + i];
                // Forward half of the stencil covers every pair once.
                for (di, dj, d) in [(1isize, 0isize, cell), (0, 1, cell), (1, 1, diag), (-1, 1, diag)] {
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    if ni < 0 || nj < 0 || ni >= nx as isize || nj >= ny as isize {
                        continue;
                    }
                    let hn = self.heights[nj as usize * nx + ni as usize];
                    worst = worst.max((h - hn).abs() / d);
                }
            }
        }
        worst
    }

    /// Samples an `n x n` patch of side `side` centred at `pose`, with the
    /// patch's first axis along the pose heading.
    pub fn cutout(&self, pose: &Pose, n: usize, side: f64) -> Result<LocalPatch> {
        let mut patch = LocalPatch::zeros(*pose, n, side)?;
        for corner in patch.corners() {
            if !self.contains(corner[0], corner[1]) {
                return Err(self.out_of_bounds(corner[0], corner[1]));
            }
        }
        let (sin, cos) = pose.heading.sin_cos();
        let coords: Vec<f64> = (0..n).map(|a| patch.local_coord(a)).collect();
        for (b, &v) in coords.iter().enumerate() {
            for (a, &u) in coords.iter().enumerate() {
                let x = pose.x + u * cos - v * sin;
                let y = pose.y + u * sin + v * cos;
                patch.heights[b * n + a] = self.sample_unchecked(x, y);
            }
        }
        Ok(patch)
    }

    /// Writes a patch back: every cell whose centre lies inside the patch's
    /// lattice hull gets the patch value sampled bilinearly at that centre.
    pub fn replace(&self, patch: &LocalPatch) -> Result<HeightField> {
        let mut out = self.clone();
        out.replace_in_place(patch)?;
        Ok(out)
    }

    /// Returns the inclusive grid window `(i0, i1, j0, j1)` that was touched.
    pub(crate) fn replace_in_place(&mut self, patch: &LocalPatch) -> Result<(usize, usize, usize, usize)> {
        self.write_patch(patch, |_, value| value)
    }

    /// Adds a patch of height changes, sampled bilinearly like [`replace`].
    /// Cells the patch leaves at zero keep their exact heights.
    ///
    /// [`replace`]: HeightField::replace
    pub(crate) fn add_in_place(&mut self, delta: &LocalPatch) -> Result<(usize, usize, usize, usize)> {
        self.write_patch(delta, |old, value| old + value)
    }

    fn write_patch(
        &mut self,
        patch: &LocalPatch,
        combine: impl Fn(f64, f64) -> f64,
    ) -> Result<(usize, usize, usize, usize)> {
        let corners = patch.corners();
        for c in &corners {
            if !self.contains(c[0], c[1]) {
                return Err(self.out_of_bounds(c[0], c[1]));
            }
        }
        let FieldDims { nx, ny, .. } = self.dims;
        let (mut gx0, mut gx1, mut gy0, mut gy1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for c in &corners {
            let (fx, fy) = self.dims.grid_coords(c[0], c[1]);
            gx0 = gx0.min(fx);
            gx1 = gx1.max(fx);
            gy0 = gy0.min(fy);
            gy1 = gy1.max(fy);
        }
        let i0 = gx0.floor().max(0.0) as usize;
        let i1 = (gx1.ceil() as usize).min(nx - 1);
        let j0 = gy0.floor().max(0.0) as usize;
        let j1 = (gy1.ceil() as usize).min(ny - 1);

        let n = patch.n;
        let s = patch.spacing();
        let half = patch.side / 2.0;
        let hi = (n - 1) as f64;
        for j in j0..=j1 {
            for i in i0..=i1 {
                let [x, y] = self.dims.cell_center(i, j);
                let [u, v] = patch.pose.to_local(x, y);
                let fa = snap((u + half) / s - 0.5);
                let fb = snap((v + half) / s - 0.5);
                if fa < -BOUNDS_TOL || fb < -BOUNDS_TOL || fa > hi + BOUNDS_TOL || fb > hi + BOUNDS_TOL {
                    continue;
                }
                let value = bilinear(&patch.heights, n, n, fa.clamp(0.0, hi), fb.clamp(0.0, hi));
                let h = &mut self.heights[j * nx + i];
                *h = combine(*h, value);
            }
        }
        Ok((i0, i1, j0, j1))
    }

    pub(crate) fn heights_mut(&mut self) -> &mut [f64] {
        &mut self.heights
    }
}

/// A rotated square cutout of a heightfield.
///
/// Cell `(a, b)` sits at local coordinates `(u_a, v_b)`, with `u` along the
/// pose heading and `v` to its left; heights are stored at `b * n + a`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPatch {
    pub n: usize,
    pub side: f64,
    pub pose: Pose,
    pub heights: Vec<f64>,
}

impl LocalPatch {
    pub fn zeros(pose: Pose, n: usize, side: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("patch needs at least 2 cells per side, got {n}")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::invalid(format!("patch side must be positive, got {side}")));
        }
        Ok(Self {
            n,
            side,
            pose,
            heights: vec![0.0; n * n],
        })
    }

    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    /// Local coordinate of lattice index `a` (same for both axes).
    pub fn local_coord(&self, a: usize) -> f64 {
        (a as f64 + 0.5) * self.spacing() - self.side / 2.0
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.heights[b * self.n + a]
    }

    pub fn set(&mut self, a: usize, b: usize, h: f64) {
        self.heights[b * self.n + a] = h;
    }

    /// World positions of the four outermost lattice points.
    pub fn corners(&self) -> [[f64; 2]; 4] {
        let e = self.local_coord(self.n - 1);
        [
            self.pose.to_world(-e, -e),
            self.pose.to_world(e, -e),
            self.pose.to_world(e, e),
            self.pose.to_world(-e, e),
        ]
    }

    /// Patch volume (sum of heights times cell area).
    pub fn volume(&self) -> f64 {
        let s = self.spacing();
        self.heights.iter().sum::<f64>() * s * s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    fn dims(nx: usize, ny: usize) -> FieldDims {
        FieldDims::new(nx, ny, 0.1, [-(nx as f64 - 1.0) * 0.05, -(ny as f64 - 1.0) * 0.05]).unwrap()
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(FieldDims::new(1, 5, 0.1, [0.0, 0.0]).is_err());
        assert!(FieldDims::new(5, 5, 0.0, [0.0, 0.0]).is_err());
        let d = dims(4, 4);
        assert!(HeightField::new(d, vec![0.0; 15]).is_err());
        assert!(HeightField::new(d, vec![f64::NAN; 16]).is_err());
    }

    #[test]
    fn constant_field_samples_constant() {
        let f = HeightField::constant(dims(30, 20), 1.8).unwrap();
        for &(x, y) in &[(0.0, 0.0), (0.123, -0.456), (1.3, 0.9)] {
            assert_eq!(f.sample(x, y).unwrap(), 1.8);
        }
    }

    #[test]
    fn sample_at_cell_centre_is_stored_value() {
        let d = dims(10, 8);
        let f = HeightField::from_fn(d, |x, y| (3.0 * x).sin() + y * y).unwrap();
        for j in 0..8 {
            for i in 0..10 {
                let [x, y] = d.cell_center(i, j);
                assert_eq!(f.sample(x, y).unwrap(), f.get(i, j));
            }
        }
    }

    #[test]
    fn bilinear_reproduces_planes() {
        let d = dims(21, 21);
        let f = HeightField::from_fn(d, |x, _| 0.1 * x).unwrap();
        for k in 0..19 {
            let x = d.origin[0] + (k as f64 + 0.5) * 0.1;
            let y = d.origin[1] + 0.37;
            assert!((f.sample(x, y).unwrap() - 0.1 * x).abs() < 1e-12);
        }
    }

    #[test]
    fn sample_outside_is_bounds_error() {
        let f = HeightField::constant(dims(10, 10), 0.0).unwrap();
        assert!(matches!(f.sample(5.0, 0.0), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn zero_rotation_cutout_copies_subgrid() {
        let d = FieldDims::new(40, 40, 0.1, [0.05, 0.05]).unwrap();
        let f = HeightField::from_fn(d, |x, y| x * x - 0.3 * y + (5.0 * y).cos()).unwrap();
        // 10 cells of 0.1 m centred on a cell boundary: lattice == field centres.
        let p = f.cutout(&Pose::new(2.0, 1.5, 0.0), 10, 1.0).unwrap();
        for b in 0..10 {
            for a in 0..10 {
                assert_eq!(p.get(a, b), f.get(15 + a, 10 + b));
            }
        }
    }

    #[test]
    fn cutout_footprint_outside_reports_corner() {
        let f = HeightField::constant(dims(20, 20), 1.0).unwrap();
        let err = f.cutout(&Pose::new(0.9, 0.0, FRAC_PI_4), 10, 1.0).unwrap_err();
        match err {
            Error::OutOfBounds { x, .. } => assert!(x > 0.95),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn cone_cutout_is_rotation_invariant() {
        let d = dims(101, 101);
        let f = HeightField::from_fn(d, |x, y| (2.0 - x.hypot(y)).max(0.0)).unwrap();
        let p0 = f.cutout(&Pose::new(0.0, 0.0, 0.0), 20, 2.0).unwrap();
        let p1 = f.cutout(&Pose::new(0.0, 0.0, FRAC_PI_2), 20, 2.0).unwrap();
        // The lattice is symmetric under a quarter turn, so both patches sample
        // the same set of radii.
        for b in 0..20 {
            for a in 0..20 {
                assert!((p0.get(a, b) - p1.get(a, b)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_aligned_roundtrip_is_exact() {
        let d = FieldDims::new(40, 40, 0.1, [0.05, 0.05]).unwrap();
        let f = HeightField::from_fn(d, |x, y| (x * 1.7).sin() * (y * 0.9).cos() + 1.0).unwrap();
        let p = f.cutout(&Pose::new(2.0, 2.0, 0.0), 12, 1.2).unwrap();
        assert_eq!(f.replace(&p).unwrap(), f);
    }

    #[test]
    fn roundtrip_on_planes_at_rotations() {
        let d = dims(81, 81);
        let f = HeightField::from_fn(d, |x, y| 0.3 * x - 0.2 * y + 1.0).unwrap();
        for theta in [0.0, FRAC_PI_6, FRAC_PI_4] {
            let p = f.cutout(&Pose::new(0.13, -0.21, theta), 36, 3.6).unwrap();
            let g = f.replace(&p).unwrap();
            let worst = f
                .heights()
                .iter()
                .zip(g.heights())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-6, "theta {theta}: {worst}");
        }
    }

    #[test]
    fn lowered_patch_removes_expected_volume() {
        let d = dims(101, 101);
        let f = HeightField::constant(d, 1.0).unwrap();
        for theta in [0.0, 0.4, FRAC_PI_4] {
            let mut p = f.cutout(&Pose::new(0.0, 0.0, theta), 36, 3.6).unwrap();
            p.heights.iter_mut().for_each(|h| *h -= 0.2);
            let g = f.replace(&p).unwrap();
            let dv = f.volume() - g.volume();
            // Replacement covers the hull of the sample points.
            let expected = 0.2 * 3.5 * 3.5;
            assert!((dv - expected).abs() / expected < 0.02, "theta {theta}: {dv}");
        }
    }

    #[test]
    fn replace_leaves_outside_cells_untouched() {
        let d = dims(60, 60);
        let f = HeightField::from_fn(d, |x, y| x + y + 3.0).unwrap();
        let mut p = f.cutout(&Pose::new(0.5, -0.4, 0.3), 10, 1.0).unwrap();
        p.heights.iter_mut().for_each(|h| *h = 0.0);
        let g = f.replace(&p).unwrap();
        let pose = p.pose;
        let e = p.local_coord(9) + 0.1;
        for j in 0..60 {
            for i in 0..60 {
                let [x, y] = d.cell_center(i, j);
                let [u, v] = pose.to_local(x, y);
                if u.abs() > e || v.abs() > e {
                    assert_eq!(f.get(i, j), g.get(i, j));
                }
            }
        }
    }
}
