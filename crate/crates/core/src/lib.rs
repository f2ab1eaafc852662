//! Planning toolkit for sequential wheel-loader loading cycles.
//!
//! The crate models a soil pile as a [`HeightField`], predicts the outcome of
//! a single loading (pile change and mass/time/work) through a pluggable
//! [`WorldModel`], estimates V-turn transport costs from spline paths and a
//! longitudinal vehicle model, and selects dig locations and loading-controller
//! actions with a look-ahead tree search.
//!
//! Module map:
//!
//! * [`heightfield`]: grid heightfield, rotated cutout/replace, pile
//!   generation, angle-of-repose settling, HFLD/CSV I/O.
//! * [`worldmodel`]: the world-model interface, the analytic surrogate and the
//!   projected-gradient loading-action optimizer.
//! * [`vturn`]: spline legs, path quality, switch-back optimization, motion
//!   integration and the precomputed cost table.
//! * [`planner`]: dig-candidate extraction, the depth-`d` evaluation function,
//!   tree search and the single-step strategies.
//! * [`harness`]: scenario configuration, seeded experiments and reports.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod heightfield;
pub mod io;
mod units;
pub mod planner;
pub mod vturn;
pub mod worldmodel;

pub use error::{Error, Result};
pub use geometry::Pose;
pub use heightfield::{FieldDims, HeightField, LocalPatch, PileSpec};
pub use planner::{DigCandidate, PlanStep, PlannerConfig, SearchStats, Strategy};
pub use vturn::{VTurnCost, VTurnLut, VTurnPath, VehicleParams};
pub use worldmodel::{
    DigPose, LoadAction, Normalization, PerformanceTriple, Surrogate, SurrogateParams, WorldModel,
};
