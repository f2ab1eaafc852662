//! V-turn transport between the receiver and a dig pose.
//!
//! A V-turn is two spline legs: the loader reverses from its start pose to a
//! switch-back point, stops, and drives forward to its goal pose. The
//! switch-back pose is chosen by a bounded Powell search minimizing
//! curvature, curvature change and length. Time and work come from
//! integrating the longitudinal dynamics along each leg.
//!
//! Poses give the direction the loader faces. The receiver pose in a
//! scenario is the direction the loader backs away in, so the loader faces
//! the opposite way at the receiver (see [`dump_facing`]).

mod dynamics;
mod lut;
mod powell;
mod spline;

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Pose};
use crate::{Error, Result};

pub use dynamics::{euler_step, integrate_leg, LegEnd, VTurnCost, VehicleParams};
pub use lut::{LutAxis, VTurnLut, VLUT_MAGIC, VLUT_VERSION};
pub use powell::{powell_minimize, PowellOptions, PowellResult};
pub use spline::{basis_derivatives, LegSamples, SplineSegment, KNOTS, SAMPLES};

/// Path-shape and search settings for V-turn planning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VTurnConfig {
    /// Weights of curvature, curvature change and length.
    pub gamma: [f64; 3],
    /// Distance from the start pose to the near edge of the switch-back box.
    #[serde(rename = "box_offset_m")]
    pub box_offset: f64,
    #[serde(rename = "box_side_m")]
    pub box_side: f64,
    /// Derivative magnitudes at the receiver, the dig pose, and both sides
    /// of the switch-back.
    pub derivative_mags: [f64; 4],
    pub starts: usize,
    pub max_evals_per_start: usize,
}

impl Default for VTurnConfig {
    fn default() -> Self {
        Self {
            gamma: [10.0, 10.0, 1.0],
            box_offset: 5.0,
            box_side: 10.0,
            derivative_mags: [10.0, 30.0, 5.0, 5.0],
            starts: 5,
            max_evals_per_start: 100,
        }
    }
}

impl VTurnConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.gamma.iter().all(|g| *g >= 0.0 && g.is_finite()) {
            return Err(Error::Config("path weights must be non-negative".into()));
        }
        if !(self.box_offset >= 0.0 && self.box_side >= 0.0) {
            return Err(Error::Config("switch-back box must have non-negative size".into()));
        }
        if !self.derivative_mags.iter().all(|m| *m > 0.0) {
            return Err(Error::Config("derivative magnitudes must be positive".into()));
        }
        if self.starts == 0 || self.max_evals_per_start < 10 {
            return Err(Error::Config("need at least one start and 10 evaluations per start".into()));
        }
        Ok(())
    }
}

/// The pose the loader faces at the receiver.
pub fn dump_facing(dump: &Pose) -> Pose {
    dump.reversed()
}

/// A planned V-turn.
#[derive(Debug, Clone, PartialEq)]
pub struct VTurnPath {
    pub leg_a: SplineSegment,
    pub leg_b: SplineSegment,
    /// Facing pose at the switch-back point.
    pub switch_back: Pose,
    pub samples_a: LegSamples,
    pub samples_b: LegSamples,
    pub quality: f64,
}

impl VTurnPath {
    pub fn total_length(&self) -> f64 {
        self.samples_a.length() + self.samples_b.length()
    }

    /// Time and work of driving both legs; `approach` marks that the
    /// forward leg ends at a dig point.
    pub fn cost(&self, load_mass: f64, approach: bool, vp: &VehicleParams) -> VTurnCost {
        let end_b = if approach { LegEnd::Approach } else { LegEnd::Stop };
        integrate_leg(self.samples_a.length(), load_mass, LegEnd::Stop, vp)
            + integrate_leg(self.samples_b.length(), load_mass, end_b, vp)
    }
}

fn heading_vec(h: f64) -> [f64; 2] {
    [h.cos(), h.sin()]
}

fn neg(v: [f64; 2]) -> [f64; 2] {
    [-v[0], -v[1]]
}

/// Builds both legs through a given switch-back pose. `mags` are the
/// derivative magnitudes at `from`, `to`, and into/out of the switch-back.
pub fn build_vturn(from: &Pose, to: &Pose, switch_back: &Pose, mags: [f64; 4], gamma: &[f64; 3]) -> Result<VTurnPath> {
    let sb = switch_back.position();
    let psi = heading_vec(switch_back.heading);
    let leg_a = SplineSegment::solve(
        from.position(),
        neg(from.direction()),
        mags[0],
        sb,
        neg(psi),
        mags[2],
    )?;
    let leg_b = SplineSegment::solve(sb, psi, mags[3], to.position(), to.direction(), mags[1])?;
    let samples_a = leg_a.sample()?;
    let samples_b = leg_b.sample()?;
    let quality = samples_a.quality(gamma) + samples_b.quality(gamma);
    Ok(VTurnPath {
        leg_a,
        leg_b,
        switch_back: *switch_back,
        samples_a,
        samples_b,
        quality,
    })
}

/// Switch-back pose for unit-cube coordinates `z`: distance behind `from`
/// along its reversing direction, lateral offset, and heading offset from
/// the direction towards `to`.
fn switch_back_pose(from: &Pose, to: &Pose, z: &[f64; 3], cfg: &VTurnConfig) -> Pose {
    let u = cfg.box_offset + z[0] * cfg.box_side;
    let v = (z[1] - 0.5) * cfg.box_side;
    // Reversing frame: u backwards along the heading, v to its left.
    let back = from.reversed();
    let [x, y] = back.to_world(u, v);
    let toward = (to.y - y).atan2(to.x - x);
    let phi = (z[2] - 0.5) * std::f64::consts::PI;
    Pose::new(x, y, normalize_angle(toward + phi))
}

/// Plans a V-turn from `from` (reversing away) to `to` (arriving forward).
/// `mag_from` and `mag_to` are the derivative magnitudes at the two ends.
pub fn plan_vturn(from: &Pose, to: &Pose, mag_from: f64, mag_to: f64, cfg: &VTurnConfig) -> Result<VTurnPath> {
    if crate::geometry::dist(from.position(), to.position()) < 1e-9 {
        return Err(Error::Planning("V-turn endpoints coincide".into()));
    }
    let mags = [mag_from, mag_to, cfg.derivative_mags[2], cfg.derivative_mags[3]];
    let score = |z: &[f64; 3]| {
        let sb = switch_back_pose(from, to, z, cfg);
        match build_vturn(from, to, &sb, mags, &cfg.gamma) {
            Ok(p) if p.quality.is_finite() => p.quality,
            _ => f64::INFINITY,
        }
    };
    let opts = PowellOptions {
        max_evals: cfg.max_evals_per_start,
        ..PowellOptions::default()
    };
    let mut best: Option<PowellResult> = None;
    for k in 0..cfg.starts {
        let f = (2 * k + 1) as f64 / (2 * cfg.starts) as f64;
        let r = powell_minimize(&score, [f, f, 0.5], &opts);
        if best.as_ref().map_or(true, |b| r.value < b.value) {
            best = Some(r);
        }
    }
    let best = best.filter(|b| b.value.is_finite()).ok_or_else(|| {
        Error::Planning(format!(
            "no finite path quality after {} evaluations",
            cfg.starts * cfg.max_evals_per_start
        ))
    })?;
    build_vturn(from, to, &switch_back_pose(from, to, &best.x, cfg), mags, &cfg.gamma)
}

/// V-turn-1: receiver to dig pose.
pub fn plan_v1(dump: &Pose, dig: &Pose, cfg: &VTurnConfig) -> Result<VTurnPath> {
    plan_vturn(&dump_facing(dump), dig, cfg.derivative_mags[0], cfg.derivative_mags[1], cfg)
}

/// V-turn-2: dig pose back to the receiver.
pub fn plan_v2(dump: &Pose, dig: &Pose, cfg: &VTurnConfig) -> Result<VTurnPath> {
    plan_vturn(dig, &dump_facing(dump), cfg.derivative_mags[1], cfg.derivative_mags[0], cfg)
}

/// Plans and drives both V-turns for one cycle.
pub fn direct_costs(
    dump: &Pose,
    dig: &Pose,
    load_mass: f64,
    cfg: &VTurnConfig,
    vp: &VehicleParams,
) -> Result<(VTurnCost, VTurnCost)> {
    let v1 = plan_v1(dump, dig, cfg)?.cost(0.0, true, vp);
    let v2 = plan_v2(dump, dig, cfg)?.cost(load_mass, false, vp);
    Ok((v1, v2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dump() -> Pose {
        Pose::new(-12.0, -3.0, (-30f64).to_radians())
    }

    #[test]
    fn v1_path_is_consistent() {
        let cfg = VTurnConfig::default();
        let dig = Pose::new(0.0, 1.3, std::f64::consts::FRAC_PI_2);
        let p = plan_v1(&dump(), &dig, &cfg).unwrap();
        // Both legs meet at the switch-back with matching headings.
        let end_a = p.leg_a.point(1.0);
        let start_b = p.leg_b.point(0.0);
        assert!(crate::geometry::dist(end_a, start_b) < 1e-9);
        let ta = p.leg_a.derivative(1.0);
        let tb = p.leg_b.derivative(0.0);
        let ha = (-ta[1]).atan2(-ta[0]);
        let hb = tb[1].atan2(tb[0]);
        assert!(normalize_angle(ha - hb).abs() < 1e-6);
        // Switch-back inside the box behind the receiver.
        let [u, v] = dump_facing(&dump()).reversed().to_local(p.switch_back.x, p.switch_back.y);
        assert!(u >= 5.0 - 1e-9 && u <= 15.0 + 1e-9 && v.abs() <= 5.0 + 1e-9, "{u} {v}");
        assert!(p.quality.is_finite() && p.total_length() > 10.0);
    }

    #[test]
    fn planning_is_deterministic() {
        let cfg = VTurnConfig::default();
        let dig = Pose::new(3.0, 1.5, 1.4);
        assert_eq!(plan_v2(&dump(), &dig, &cfg).unwrap(), plan_v2(&dump(), &dig, &cfg).unwrap());
    }

    #[test]
    fn point_box_pins_switch_back() {
        let free = VTurnConfig::default();
        let pinned = VTurnConfig {
            box_side: 0.0,
            ..free
        };
        let dig = Pose::new(-2.0, 1.2, 1.7);
        let a = plan_v1(&dump(), &dig, &free).unwrap();
        let b = plan_v1(&dump(), &dig, &pinned).unwrap();
        let expected = dump_facing(&dump()).reversed().to_world(5.0, 0.0);
        assert!(crate::geometry::dist(b.switch_back.position(), expected) < 1e-9);
        assert!(b.quality >= a.quality);
    }

    #[test]
    fn coincident_endpoints_fail() {
        let p = Pose::new(1.0, 1.0, 0.0);
        assert!(matches!(
            plan_vturn(&p, &p, 10.0, 30.0, &VTurnConfig::default()),
            Err(Error::Planning(_))
        ));
    }
}
