//! World-model interface and the default analytic surrogate.
//!
//! A world model answers two questions about a dig at pose `x^dig` with a
//! loading action `a^load`: what the pile looks like afterwards (Φ) and what
//! mass, time and work the loading produces (Ψ). Planning code only talks to
//! the [`WorldModel`] trait, so a learned model can be slotted in.

mod optimize;
mod surrogate;

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Pose};
use crate::heightfield::HeightField;
use crate::{Error, Result};

pub use optimize::{fd_gradient, optimize_action, OptimizeOptions, OptimizeResult};
pub use surrogate::{Surrogate, SurrogateParams, SurrogatePatch, PERF_PATCH, PILE_PATCH};

/// Mass reported for a loading that collects no soil.
pub const ZERO_MASS_FLOOR: f64 = 1.0;

/// Four loading-controller parameters, each in `[0, 1]`: penetration,
/// lift reactivity, tilt reactivity, throttle aggressiveness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadAction(pub [f64; 4]);

impl LoadAction {
    /// Deep thrust with little lifting; also the optimizer's start point.
    pub const NOMINAL: LoadAction = LoadAction([1.0, 0.0, 0.5, 0.5]);

    /// Clamps every component into `[0, 1]` (NaN becomes 0).
    pub fn new(a: [f64; 4]) -> Self {
        LoadAction(a.map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }))
    }

    pub fn penetration(&self) -> f64 {
        self.0[0]
    }

    pub fn lift(&self) -> f64 {
        self.0[1]
    }

    pub fn tilt(&self) -> f64 {
        self.0[2]
    }

    pub fn throttle(&self) -> f64 {
        self.0[3]
    }
}

/// Dig location and heading (into the pile).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DigPose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl DigPose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self {
            x,
            y,
            heading: normalize_angle(heading),
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.x, self.y, self.heading)
    }
}

impl From<Pose> for DigPose {
    fn from(p: Pose) -> Self {
        DigPose::new(p.x, p.y, p.heading)
    }
}

/// Raw mass (kg), time (s) and work (J) of one subtask or a sum of them.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerformanceTriple {
    pub mass: f64,
    pub time: f64,
    pub work: f64,
}

impl PerformanceTriple {
    pub fn new(mass: f64, time: f64, work: f64) -> Self {
        Self { mass, time, work }
    }

    /// True for a loading that produced no soil (mass at the floor).
    pub fn is_zero_mass(&self) -> bool {
        self.mass > 0.0 && self.mass <= ZERO_MASS_FLOOR
    }
}

impl std::ops::Add for PerformanceTriple {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self::new(self.mass + o.mass, self.time + o.time, self.work + o.work)
    }
}

/// Characteristic values and weights of the scalar objective
/// `w · [M0/M, T/T0, W/W0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Normalization {
    #[serde(rename = "mass_ref_kg")]
    pub m0: f64,
    #[serde(rename = "time_ref_s")]
    pub t0: f64,
    #[serde(rename = "work_ref_j")]
    pub w0: f64,
    pub weights: [f64; 3],
}

impl Default for Normalization {
    fn default() -> Self {
        Self {
            m0: 4800.0,
            t0: 25.0,
            w0: 1.0e6,
            weights: [1.0, 1.0, 1.0],
        }
    }
}

impl Normalization {
    pub fn validate(&self) -> Result<()> {
        let all = [self.m0, self.t0, self.w0, self.weights[0], self.weights[1], self.weights[2]];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("normalization values and weights must be positive".into()))
        }
    }

    /// `[M0/M, T/T0, W/W0]`. A triple without mass (transport, dumping)
    /// contributes nothing to the mass term.
    pub fn normalized(&self, p: &PerformanceTriple) -> [f64; 3] {
        let m = if p.mass > 0.0 { self.m0 / p.mass } else { 0.0 };
        [m, p.time / self.t0, p.work / self.w0]
    }

    pub fn objective(&self, p: &PerformanceTriple) -> f64 {
        let n = self.normalized(p);
        self.weights[0] * n[0] + self.weights[1] * n[1] + self.weights[2] * n[2]
    }

    /// Objective of a sequence of cycles: per-cycle mass terms are summed,
    /// time and work enter through their totals.
    pub fn objective_sum<'a>(&self, cycles: impl IntoIterator<Item = &'a PerformanceTriple>) -> f64 {
        cycles.into_iter().map(|p| self.objective(p)).sum()
    }
}

/// Result of a pile expansion.
#[derive(Debug, Clone)]
pub struct PilePrediction {
    pub field: HeightField,
    /// Soil carried away in the bucket (m^3).
    pub removed_volume: f64,
    /// Soil displaced by the bucket, including what went to the berms (m^3).
    pub swept_volume: f64,
    /// Nothing was excavated; `field` equals the input.
    pub zero_mass: bool,
}

/// Pile-state predictor Φ and loading-performance predictor Ψ.
///
/// `encode` does the per-dig work shared by all actions (typically a cutout),
/// so the optimizer can probe many actions cheaply through `performance`.
pub trait WorldModel: Send + Sync {
    type Encoding: Send + Sync;

    fn encode(&self, field: &HeightField, dig: &DigPose) -> Result<Self::Encoding>;

    fn performance(&self, enc: &Self::Encoding, action: &LoadAction) -> PerformanceTriple;

    fn predict_pile(&self, field: &HeightField, dig: &DigPose, action: &LoadAction) -> Result<PilePrediction>;

    fn predict_performance(&self, field: &HeightField, dig: &DigPose, action: &LoadAction) -> Result<PerformanceTriple> {
        Ok(self.performance(&self.encode(field, dig)?, action))
    }

    /// Angle of repose the model settles piles to, if any.
    fn repose(&self) -> Option<f64> {
        None
    }
}
