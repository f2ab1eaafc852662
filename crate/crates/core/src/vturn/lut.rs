//! Precomputed V-turn costs over a lattice of dig poses.
//!
//! VLUT layout (little-endian): `"VLUT"`, `u16` version, receiver pose as
//! three `f64` (x, y, heading in radians), three axis descriptors
//! `(f64 min, f64 step, u32 count)` for x, y and heading, then five `f32`
//! per node: V-turn-1 time and work, V-turn-2 time, and V-turn-2 work as
//! `base + slope * load_mass`. Nodes are ordered with x fastest, heading
//! slowest.

use std::f64::consts::TAU;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{VTurnConfig, VTurnCost, VehicleParams};
use crate::geometry::Pose;
use crate::io::{read_file, write_atomic, Reader};
use crate::{Error, Result};

pub const VLUT_MAGIC: &[u8; 4] = b"VLUT";
pub const VLUT_VERSION: u16 = 1;

/// Load used to fit the linear V-turn-2 work model.
const REFERENCE_LOAD: f64 = 4800.0;
const HULL_TOL: f64 = 1e-9;

/// A uniform axis `min + k * step`, `k < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LutAxis {
    pub min: f64,
    pub step: f64,
    pub count: u32,
}

impl LutAxis {
    pub fn new(min: f64, step: f64, count: u32) -> Self {
        Self { min, step, count }
    }

    /// Axis covering `[lo, hi]` at the given spacing (rounded to a whole
    /// number of steps).
    pub fn covering(lo: f64, hi: f64, step: f64) -> Self {
        let n = ((hi - lo) / step).ceil().max(0.0) as u32 + 1;
        Self::new(lo, step, n)
    }

    /// Full circle of headings.
    pub fn headings(count: u32) -> Self {
        Self::new(0.0, TAU / count as f64, count)
    }

    pub fn value(&self, k: u32) -> f64 {
        self.min + k as f64 * self.step
    }

    pub fn max(&self) -> f64 {
        self.value(self.count.saturating_sub(1))
    }

    fn is_periodic(&self) -> bool {
        (self.step * self.count as f64 - TAU).abs() < 1e-9
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.count == 0 || !(self.step > 0.0) || !self.min.is_finite() {
            return Err(Error::invalid(format!("lookup-table {name} axis is empty or has a bad step")));
        }
        Ok(())
    }

    /// Lower node and weight of the upper node, or `None` outside the hull.
    fn locate(&self, q: f64) -> Option<(u32, u32, f64)> {
        if self.is_periodic() {
            let f = (q - self.min).rem_euclid(TAU) / self.step;
            let k = (f.floor() as u32).min(self.count - 1);
            return Some((k, (k + 1) % self.count, f - k as f64));
        }
        let f = (q - self.min) / self.step;
        let top = (self.count - 1) as f64;
        if f < -HULL_TOL || f > top + HULL_TOL {
            return None;
        }
        let f = f.clamp(0.0, top);
        if self.count == 1 {
            return Some((0, 0, 0.0));
        }
        let k = (f.floor() as u32).min(self.count - 2);
        Some((k, k + 1, f - k as f64))
    }
}

/// Lattice of V-turn costs for one receiver pose.
#[derive(Debug, Clone, PartialEq)]
pub struct VTurnLut {
    pub dump: Pose,
    pub x: LutAxis,
    pub y: LutAxis,
    pub heading: LutAxis,
    nodes: Vec<[f32; 5]>,
}

impl VTurnLut {
    /// Plans and integrates both V-turns at every lattice node.
    pub fn build(
        dump: Pose,
        x: LutAxis,
        y: LutAxis,
        heading: LutAxis,
        cfg: &VTurnConfig,
        vp: &VehicleParams,
    ) -> Result<Self> {
        x.validate("x")?;
        y.validate("y")?;
        heading.validate("heading")?;
        let (nx, ny, nh) = (x.count as usize, y.count as usize, heading.count as usize);
        let nodes = (0..nx * ny * nh)
            .into_par_iter()
            .map(|idx| {
                let i = (idx % nx) as u32;
                let j = ((idx / nx) % ny) as u32;
                let k = (idx / (nx * ny)) as u32;
                let dig = Pose::new(x.value(i), y.value(j), heading.value(k));
                let v1 = super::plan_v1(&dump, &dig, cfg)?.cost(0.0, true, vp);
                let v2_path = super::plan_v2(&dump, &dig, cfg)?;
                let empty = v2_path.cost(0.0, false, vp);
                let loaded = v2_path.cost(REFERENCE_LOAD, false, vp);
                let slope = (loaded.work - empty.work) / REFERENCE_LOAD;
                Ok([v1.time as f32, v1.work as f32, empty.time as f32, empty.work as f32, slope as f32])
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dump,
            x,
            y,
            heading,
            nodes,
        })
    }

    fn index(&self, i: u32, j: u32, k: u32) -> usize {
        ((k as usize * self.y.count as usize) + j as usize) * self.x.count as usize + i as usize
    }

    pub fn node(&self, i: u32, j: u32, k: u32) -> [f32; 5] {
        self.nodes[self.index(i, j, k)]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trilinear interpolation of `(V-turn-1, V-turn-2)` costs at a dig pose.
    pub fn lookup(&self, dig: &Pose, load_mass: f64) -> Result<(VTurnCost, VTurnCost)> {
        let out = || Error::Extrapolation {
            x: dig.x,
            y: dig.y,
            heading: dig.heading,
        };
        let (i0, i1, tx) = self.x.locate(dig.x).ok_or_else(out)?;
        let (j0, j1, ty) = self.y.locate(dig.y).ok_or_else(out)?;
        let (k0, k1, th) = self.heading.locate(dig.heading).ok_or_else(out)?;
        let mut acc = [0.0f64; 5];
        for (k, wk) in [(k0, 1.0 - th), (k1, th)] {
            for (j, wj) in [(j0, 1.0 - ty), (j1, ty)] {
                for (i, wi) in [(i0, 1.0 - tx), (i1, tx)] {
                    let w = wi * wj * wk;
                    if w == 0.0 {
                        continue;
                    }
                    let n = self.node(i, j, k);
                    for (a, v) in acc.iter_mut().zip(n) {
                        *a += w * f64::from(v);
                    }
                }
            }
        }
        let v1 = VTurnCost {
            time: acc[0],
            work: acc[1],
            capped: false,
        };
        let v2 = VTurnCost {
            time: acc[2],
            work: acc[3] + acc[4] * load_mass,
            capped: false,
        };
        Ok((v1, v2))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 2 + 24 + 60 + 20 * self.nodes.len());
        out.extend_from_slice(VLUT_MAGIC);
        out.extend_from_slice(&VLUT_VERSION.to_le_bytes());
        for v in [self.dump.x, self.dump.y, self.dump.heading] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for a in [self.x, self.y, self.heading] {
            out.extend_from_slice(&a.min.to_le_bytes());
            out.extend_from_slice(&a.step.to_le_bytes());
            out.extend_from_slice(&a.count.to_le_bytes());
        }
        for n in &self.nodes {
            for v in n {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf, "VLUT");
        if r.take(4)? != VLUT_MAGIC {
            return Err(Error::format("VLUT", "bad magic"));
        }
        let version = r.u16()?;
        if version != VLUT_VERSION {
            return Err(Error::format("VLUT", format!("unsupported version {version}")));
        }
        let dump = Pose::new(r.f64()?, r.f64()?, r.f64()?);
        let mut axes = [LutAxis::new(0.0, 0.0, 0); 3];
        for a in &mut axes {
            *a = LutAxis::new(r.f64()?, r.f64()?, r.u32()?);
        }
        for (a, name) in axes.iter().zip(["x", "y", "heading"]) {
            a.validate(name).map_err(|e| Error::format("VLUT", e.to_string()))?;
        }
        let count = axes.iter().map(|a| a.count as usize).product::<usize>();
        let mut nodes = Vec::with_capacity(count);
        for _ in 0..count {
            nodes.push([r.f32()?, r.f32()?, r.f32()?, r.f32()?, r.f32()?]);
        }
        r.finish()?;
        Ok(Self {
            dump,
            x: axes[0],
            y: axes[1],
            heading: axes[2],
            nodes,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }
}
