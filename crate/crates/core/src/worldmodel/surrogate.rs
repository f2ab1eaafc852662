//! Analytic stand-in for the learned Φ/Ψ predictors.
//!
//! The bucket sweeps a wedge straight ahead of the dig pose: length
//! `L = a1 * max_penetration`, width `bucket_width`, cut depth tapering
//! linearly from `d_c` at the entry to zero at `L`. Each cell loses the soft
//! minimum of its height and the local cut depth, so nothing is dug below
//! the ground. What does not fit in the bucket is pushed to berms on both
//! sides of the cut.
//!
//! Both predictors evaluate the same cells: the performance lattice is a
//! sub-lattice of the pile lattice, so Ψ's mass and Φ's removed volume agree
//! up to the resampling done by `replace`.

use serde::{Deserialize, Serialize};

use super::{DigPose, LoadAction, PerformanceTriple, PilePrediction, WorldModel, ZERO_MASS_FLOOR};
use crate::heightfield::{HeightField, LocalPatch, SettleOptions};
use crate::{units, Error, Result};

/// A square patch placed `ahead` metres in front of the dig pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchGeometry {
    pub n: usize,
    pub side: f64,
    pub ahead: f64,
}

impl PatchGeometry {
    pub fn spacing(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn center(&self, dig: &DigPose) -> crate::geometry::Pose {
        let [x, y] = dig.pose().to_world(self.ahead, 0.0);
        crate::geometry::Pose::new(x, y, dig.heading)
    }
}

/// Patch used for Ψ: 3.6 m square, starting at the dig point.
pub const PERF_PATCH: PatchGeometry = PatchGeometry {
    n: 36,
    side: 3.6,
    ahead: 1.8,
};

/// Patch used for Φ: 5.2 m square reaching 1.3 m behind the dig point.
pub const PILE_PATCH: PatchGeometry = PatchGeometry {
    n: 52,
    side: 5.2,
    ahead: 1.3,
};

const CELL: f64 = 0.1;
// Index of performance-lattice cell (0, 0) in the pile lattice.
const OFFSET_A: usize = 13;
const OFFSET_B: usize = 8;
/// Cut depth never exceeds this, however tall the pile.
const MAX_CUT_DEPTH: f64 = 1.2;
/// Lateral extent of each side berm.
const BERM_WIDTH: f64 = 0.6;
/// Smoothing width of the bucket-capacity soft minimum (m^3).
const CAPACITY_SMOOTHING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateParams {
    #[serde(rename = "bucket_width_m")]
    pub bucket_width: f64,
    #[serde(rename = "bucket_capacity_m3")]
    pub bucket_capacity: f64,
    #[serde(rename = "soil_density_kg_m3")]
    pub soil_density: f64,
    #[serde(rename = "repose_deg", with = "units::degrees")]
    pub repose: f64,
    #[serde(rename = "max_penetration_m")]
    pub max_penetration: f64,
    #[serde(rename = "t0_s")]
    pub t0: f64,
    #[serde(rename = "c_len_s_per_m")]
    pub c_len: f64,
    #[serde(rename = "c_fill_s")]
    pub c_fill: f64,
    #[serde(rename = "c_cut_j_per_m3")]
    pub c_cut: f64,
    #[serde(rename = "c_lift_j_per_kg_m")]
    pub c_lift: f64,
    #[serde(rename = "g_m_s2")]
    pub g: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        let g = 9.81;
        Self {
            bucket_width: 2.7,
            bucket_capacity: 3.0,
            soil_density: 1600.0,
            repose: 30f64.to_radians(),
            max_penetration: 2.5,
            t0: 8.0,
            c_len: 3.0,
            c_fill: 6.0,
            c_cut: 4000.0,
            c_lift: g * 1.5,
            g,
        }
    }
}

impl SurrogateParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.bucket_width,
            self.bucket_capacity,
            self.soil_density,
            self.max_penetration,
            self.t0,
            self.c_len,
            self.c_fill,
            self.c_cut,
            self.c_lift,
            self.g,
        ];
        if !positive.iter().all(|v| *v > 0.0 && v.is_finite()) {
            return Err(Error::Config("surrogate parameters must be positive".into()));
        }
        if !(self.repose > 0.0 && self.repose < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config("repose must be in (0, 90) degrees".into()));
        }
        let half_perf = PERF_PATCH.side / 2.0;
        if self.bucket_width / 2.0 > half_perf || self.max_penetration > PERF_PATCH.side {
            return Err(Error::Config(format!(
                "bucket footprint must fit the {} m performance patch",
                PERF_PATCH.side
            )));
        }
        if self.bucket_width / 2.0 + BERM_WIDTH > PILE_PATCH.side / 2.0 {
            return Err(Error::Config("berms must fit the pile patch".into()));
        }
        Ok(())
    }

    /// Effective bucket volume for a given lift reactivity.
    pub fn fill_capacity(&self, action: &LoadAction) -> f64 {
        self.bucket_capacity * (0.6 + 0.4 * action.lift())
    }

    pub fn cut_length(&self, action: &LoadAction) -> f64 {
        action.penetration() * self.max_penetration
    }

    pub fn lift_height(&self, action: &LoadAction) -> f64 {
        1.0 + 0.5 * action.lift() + 0.25 * action.throttle()
    }
}

#[derive(Debug, Clone, Copy)]
struct FootCell {
    /// Fraction of the cell inside the bucket width.
    weight: f64,
    h: f64,
    h4: f64,
}

/// Cells sharing one distance along the heading.
#[derive(Debug, Clone, Copy)]
struct FootRow {
    /// Near edge of the row, measured from the dig point.
    u_lo: f64,
    start: usize,
    end: usize,
}

/// Ψ encoding: the cells the bucket can reach and the local pile height.
#[derive(Debug, Clone)]
pub struct SurrogatePatch {
    cells: Vec<FootCell>,
    rows: Vec<FootRow>,
    h_local: f64,
}

impl SurrogatePatch {
    pub fn local_height(&self) -> f64 {
        self.h_local
    }
}

/// Length of `[lo, hi]` inside `[a, b]`.
fn overlap(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    (hi.min(b) - lo.max(a)).max(0.0)
}

/// Mean of `max(0, 1 - t/L)` over `t` in the cell `[lo, lo + CELL]`,
/// restricted to `t >= 0`.
fn taper_mean(lo: f64, length: f64) -> f64 {
    let a = lo.max(0.0);
    let b = (lo + CELL).min(length);
    if b <= a {
        return 0.0;
    }
    ((b - a) - (b * b - a * a) / (2.0 * length)) / CELL
}

/// Soft minimum of a height and a cut depth; zero when either is zero and
/// never above the smaller one.
#[cfg(test)]
fn soft_cut(h: f64, p: f64) -> f64 {
    soft_cut4(h, h * h * h * h, p, p * p * p * p)
}

/// [`soft_cut`] with fourth powers precomputed.
#[inline]
fn soft_cut4(h: f64, h4: f64, p: f64, p4: f64) -> f64 {
    if h <= 0.0 || p <= 0.0 {
        return 0.0;
    }
    h * p / (h4 + p4).sqrt().sqrt()
}

fn smooth_min(a: f64, b: f64, delta: f64) -> f64 {
    0.5 * (a + b - ((a - b) * (a - b) + delta * delta).sqrt())
}

/// Lateral coordinate of performance-lattice column `b`.
fn lateral(b: usize) -> f64 {
    (b as f64 + 0.5) * CELL - PERF_PATCH.side / 2.0
}

/// Deterministic analytic world model.
#[derive(Debug, Clone, Default)]
pub struct Surrogate {
    pub params: SurrogateParams,
    pub settle: SettleOptions,
}

impl Surrogate {
    pub fn new(params: SurrogateParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            settle: SettleOptions::default(),
        })
    }

    /// Collects the reachable cells from heights indexed on the performance
    /// lattice (`a` along the heading from the dig point, `b` lateral).
    fn footprint(&self, height: impl Fn(usize, usize) -> f64) -> SurrogatePatch {
        let half_w = self.params.bucket_width / 2.0;
        let mut cells = Vec::new();
        let mut rows = Vec::new();
        let mut h_local = 0.0f64;
        for a in 0..PERF_PATCH.n {
            let u_lo = a as f64 * CELL;
            if u_lo >= self.params.max_penetration {
                break;
            }
            let start = cells.len();
            for b in 0..PERF_PATCH.n {
                let v = lateral(b);
                let weight = overlap(v - CELL / 2.0, v + CELL / 2.0, -half_w, half_w) / CELL;
                if weight <= 0.0 {
                    continue;
                }
                let h = height(a, b);
                h_local = h_local.max(h);
                cells.push(FootCell { weight, h, h4: h * h * h * h });
            }
            rows.push(FootRow {
                u_lo,
                start,
                end: cells.len(),
            });
        }
        SurrogatePatch { cells, rows, h_local }
    }

    fn cut_depth(&self, enc: &SurrogatePatch, action: &LoadAction) -> f64 {
        (0.3 + 0.7 * action.tilt()) * enc.h_local.min(MAX_CUT_DEPTH)
    }

    /// Swept volume and per-cell removal (when `removal` is given).
    fn sweep(&self, enc: &SurrogatePatch, action: &LoadAction, mut removal: Option<&mut Vec<f64>>) -> f64 {
        let length = self.params.cut_length(action);
        if let Some(r) = removal.as_deref_mut() {
            r.clear();
            r.resize(enc.cells.len(), 0.0);
        }
        if length <= 0.0 {
            return 0.0;
        }
        let d_c = self.cut_depth(enc, action);
        let area = CELL * CELL;
        let mut volume = 0.0;
        for row in &enc.rows {
            if row.u_lo >= length {
                break;
            }
            let p = d_c * taper_mean(row.u_lo, length);
            if p <= 0.0 {
                continue;
            }
            let p4 = p * p * p * p;
            for k in row.start..row.end {
                let c = &enc.cells[k];
                if c.h <= 0.0 {
                    continue;
                }
                let r = soft_cut4(c.h, c.h4, p, p4);
                volume += r * c.weight * area;
                if let Some(out) = removal.as_deref_mut() {
                    out[k] = r;
                }
            }
        }
        volume
    }

    fn removed(&self, swept: f64, action: &LoadAction) -> f64 {
        smooth_min(swept, self.params.fill_capacity(action), CAPACITY_SMOOTHING).max(0.0)
    }

    /// Swept and removed volume for an encoding (m^3).
    pub fn volumes(&self, enc: &SurrogatePatch, action: &LoadAction) -> (f64, f64) {
        let swept = self.sweep(enc, action, None);
        (swept, self.removed(swept, action))
    }
}

impl WorldModel for Surrogate {
    type Encoding = SurrogatePatch;

    fn encode(&self, field: &HeightField, dig: &DigPose) -> Result<SurrogatePatch> {
        let patch = field.cutout(&PERF_PATCH.center(dig), PERF_PATCH.n, PERF_PATCH.side)?;
        Ok(self.footprint(|a, b| patch.get(a, b)))
    }

    fn performance(&self, enc: &SurrogatePatch, action: &LoadAction) -> PerformanceTriple {
        let p = &self.params;
        let (swept, removed) = self.volumes(enc, action);
        let mass = (p.soil_density * removed).max(ZERO_MASS_FLOOR);
        let time = p.t0 + p.c_len * p.cut_length(action) + p.c_fill * removed / p.bucket_capacity;
        let work = p.c_cut * swept + p.c_lift * p.soil_density * removed * p.lift_height(action);
        PerformanceTriple::new(mass, time, work)
    }

    fn predict_pile(&self, field: &HeightField, dig: &DigPose, action: &LoadAction) -> Result<PilePrediction> {
        let p = &self.params;
        let source: LocalPatch = field.cutout(&PILE_PATCH.center(dig), PILE_PATCH.n, PILE_PATCH.side)?;
        let enc = self.footprint(|a, b| source.get(a + OFFSET_A, b + OFFSET_B));
        let mut removal = Vec::new();
        let swept = self.sweep(&enc, action, Some(&mut removal));
        let removed = self.removed(swept, action);
        if p.soil_density * removed < ZERO_MASS_FLOOR {
            return Ok(PilePrediction {
                field: field.clone(),
                removed_volume: 0.0,
                swept_volume: 0.0,
                zero_mass: true,
            });
        }

        // Height changes on the pile lattice. Writing back a difference
        // rather than the resampled patch leaves the soil outside the cut
        // untouched. Footprint cells are visited in the order they were
        // collected.
        let mut patch = LocalPatch::zeros(source.pose, source.n, source.side)?;
        let half_w = p.bucket_width / 2.0;
        let mut k = 0;
        for a in 0..PERF_PATCH.n {
            if a as f64 * CELL >= p.max_penetration {
                break;
            }
            for b in 0..PERF_PATCH.n {
                let v = lateral(b);
                let weight = overlap(v - CELL / 2.0, v + CELL / 2.0, -half_w, half_w) / CELL;
                if weight <= 0.0 {
                    continue;
                }
                let (pa, pb) = (a + OFFSET_A, b + OFFSET_B);
                patch.set(pa, pb, -removal[k] * weight);
                k += 1;
            }
        }

        // Spread the overflow evenly over both berms along the cut.
        let excess = swept - removed;
        if excess > 0.0 {
            let length = p.cut_length(action);
            let s = patch.spacing();
            let mut weights = Vec::new();
            let mut total = 0.0;
            for pb in 0..PILE_PATCH.n {
                let v = patch.local_coord(pb);
                let wv = (overlap(v - s / 2.0, v + s / 2.0, half_w, half_w + BERM_WIDTH)
                    + overlap(v - s / 2.0, v + s / 2.0, -half_w - BERM_WIDTH, -half_w))
                    / s;
                if wv <= 0.0 {
                    continue;
                }
                for pa in 0..PILE_PATCH.n {
                    let u = patch.local_coord(pa) + PILE_PATCH.ahead;
                    let wu = overlap(u - s / 2.0, u + s / 2.0, 0.0, length) / s;
                    if wu > 0.0 {
                        weights.push((pa, pb, wu * wv));
                        total += wu * wv * s * s;
                    }
                }
            }
            let lift = excess / total;
            for (pa, pb, w) in weights {
                patch.set(pa, pb, patch.get(pa, pb) + lift * w);
            }
        }

        let mut out = field.clone();
        let window = out.add_in_place(&patch)?;
        out.settle_window_in_place(p.repose, window, self.settle)?;
        Ok(PilePrediction {
            field: out,
            removed_volume: removed,
            swept_volume: swept,
            zero_mass: false,
        })
    }

    fn repose(&self) -> Option<f64> {
        Some(self.params.repose)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heightfield::{generate_pile, FieldDims, PileSpec};
    use crate::worldmodel::Normalization;

    fn pile() -> HeightField {
        let spec = PileSpec {
            noise_amplitude: 0.0,
            ..PileSpec::default()
        };
        let dims = FieldDims::new(301, 211, 0.1, [-14.0, -6.0]).unwrap();
        generate_pile(&spec, dims).unwrap().settle(30f64.to_radians()).unwrap()
    }

    fn front_dig(x: f64) -> DigPose {
        DigPose::new(x, 1.2, std::f64::consts::FRAC_PI_2)
    }

    #[test]
    fn lattices_share_sample_points() {
        let dig = DigPose::new(0.3, -0.7, 0.9);
        let perf = LocalPatch::zeros(PERF_PATCH.center(&dig), PERF_PATCH.n, PERF_PATCH.side).unwrap();
        let pile = LocalPatch::zeros(PILE_PATCH.center(&dig), PILE_PATCH.n, PILE_PATCH.side).unwrap();
        for (a, b) in [(0, 0), (35, 0), (7, 30), (35, 35)] {
            let pw = perf.pose.to_world(perf.local_coord(a), perf.local_coord(b));
            let qw = pile.pose.to_world(pile.local_coord(a + OFFSET_A), pile.local_coord(b + OFFSET_B));
            assert!((pw[0] - qw[0]).abs() < 1e-12 && (pw[1] - qw[1]).abs() < 1e-12);
        }
        // Performance lattice starts at the dig point.
        assert!((perf.local_coord(0) + PERF_PATCH.ahead - CELL / 2.0).abs() < 1e-12);
    }

    #[test]
    fn taper_mean_integrates_the_wedge() {
        let length = 1.37;
        let total: f64 = (0..20).map(|a| taper_mean(a as f64 * CELL, length) * CELL).sum();
        assert!((total - length / 2.0).abs() < 1e-12);
    }

    #[test]
    fn soft_cut_is_bounded_by_min() {
        for (h, p) in [(0.3, 0.9), (1.0, 1.0), (2.0, 0.01), (0.0, 1.0), (1.0, 0.0)] {
            let r = soft_cut(h, p);
            assert!(r >= 0.0 && r <= h.min(p) + 1e-15);
        }
    }

    #[test]
    fn flat_ground_is_zero_mass() {
        let m = Surrogate::default();
        let dims = FieldDims::new(101, 101, 0.1, [-5.0, -5.0]).unwrap();
        let f = HeightField::constant(dims, 0.0).unwrap();
        let dig = DigPose::new(0.0, 0.0, 0.4);
        let pred = m.predict_pile(&f, &dig, &LoadAction::NOMINAL).unwrap();
        assert!(pred.zero_mass);
        assert_eq!(pred.field, f);
        let perf = m.predict_performance(&f, &dig, &LoadAction::NOMINAL).unwrap();
        assert!(perf.is_zero_mass());
        assert_eq!(perf.mass, ZERO_MASS_FLOOR);
    }

    #[test]
    fn zero_penetration_is_zero_mass() {
        let m = Surrogate::default();
        let perf = m
            .predict_performance(&pile(), &front_dig(0.0), &LoadAction::new([0.0, 0.5, 0.5, 0.5]))
            .unwrap();
        assert!(perf.is_zero_mass());
    }

    #[test]
    fn field_loses_removed_volume() {
        let m = Surrogate::default();
        let f = pile();
        for action in [LoadAction::NOMINAL, LoadAction::new([0.6, 0.2, 0.9, 0.1])] {
            let pred = m.predict_pile(&f, &front_dig(0.4), &action).unwrap();
            let dv = f.volume() - pred.field.volume();
            assert!(pred.removed_volume > 0.5);
            assert!((dv - pred.removed_volume).abs() / pred.removed_volume < 0.02, "{dv} vs {}", pred.removed_volume);
            assert!(pred.field.max_slope() <= m.params.repose.tan() + 1e-6);
        }
    }

    #[test]
    fn mass_matches_removed_volume() {
        let m = Surrogate::default();
        let f = pile();
        let dig = DigPose::new(1.0, 1.3, 1.4);
        let action = LoadAction::new([0.8, 0.3, 0.6, 0.2]);
        let perf = m.predict_performance(&f, &dig, &action).unwrap();
        let pred = m.predict_pile(&f, &dig, &action).unwrap();
        let phi_mass = m.params.soil_density * (f.volume() - pred.field.volume());
        assert!((perf.mass - phi_mass).abs() / perf.mass < 0.02);
    }

    #[test]
    fn repeated_dig_collects_less() {
        let m = Surrogate::default();
        let f = pile();
        let dig = front_dig(-2.0);
        let first = m.predict_pile(&f, &dig, &LoadAction::NOMINAL).unwrap();
        let second = m.predict_pile(&first.field, &dig, &LoadAction::NOMINAL).unwrap();
        assert!(second.removed_volume < first.removed_volume);
    }

    #[test]
    fn mass_non_decreasing_in_each_component() {
        let m = Surrogate::default();
        let enc = m.encode(&pile(), &front_dig(0.0)).unwrap();
        let base = [0.5, 0.5, 0.5, 0.5];
        for k in 0..4 {
            let mut prev = 0.0;
            for step in 0..=20 {
                let mut a = base;
                a[k] = step as f64 / 20.0;
                let mass = m.performance(&enc, &LoadAction::new(a)).mass;
                assert!(mass >= prev - 1e-9, "component {k} step {step}");
                prev = mass;
            }
        }
    }

    #[test]
    fn objective_is_finite_for_zero_mass() {
        let m = Surrogate::default();
        let enc = m.encode(&pile(), &front_dig(0.0)).unwrap();
        let perf = m.performance(&enc, &LoadAction::new([0.0; 4]));
        let obj = Normalization::default().objective(&perf);
        assert!(obj.is_finite() && obj > 1000.0);
    }

    #[test]
    fn rejects_oversized_bucket() {
        let p = SurrogateParams {
            bucket_width: 4.0,
            ..SurrogateParams::default()
        };
        assert!(Surrogate::new(p).is_err());
    }
}
