//! Longitudinal motion along a leg: `M dv/dt + C_r v = f`.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Vehicle and driving parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleParams {
    #[serde(rename = "mass_vehicle_kg")]
    pub mass_vehicle: f64,
    pub mu_r: f64,
    #[serde(rename = "g_m_s2")]
    pub g: f64,
    #[serde(rename = "target_speed_m_s")]
    pub target_speed: f64,
    #[serde(rename = "approach_speed_m_s")]
    pub approach_speed: f64,
    #[serde(rename = "approach_window_m")]
    pub approach_window: f64,
    #[serde(rename = "throttle_rate_per_s")]
    pub throttle_rate: f64,
    #[serde(rename = "max_traction_n")]
    pub max_traction: f64,
    #[serde(rename = "brake_decel_m_s2")]
    pub brake_decel: f64,
    /// Time constant of the speed controller.
    #[serde(rename = "speed_response_s")]
    pub speed_response: f64,
    #[serde(rename = "dt_s")]
    pub dt: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        Self {
            mass_vehicle: 15_200.0,
            mu_r: 0.01,
            g: 9.81,
            target_speed: 8.0 / 3.6,
            approach_speed: 11.4 / 3.6,
            approach_window: 5.0,
            throttle_rate: 2.0,
            max_traction: 60_000.0,
            brake_decel: 1.5,
            speed_response: 0.5,
            dt: 0.01,
        }
    }
}

impl VehicleParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mass_vehicle,
            self.mu_r,
            self.g,
            self.target_speed,
            self.approach_speed,
            self.approach_window,
            self.throttle_rate,
            self.max_traction,
            self.brake_decel,
            self.speed_response,
            self.dt,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("vehicle parameters must be positive".into()))
        }
    }

    /// Rolling-resistance coefficient `C_r = μ_r (M_vehicle + M_load) g`.
    pub fn resistance(&self, load_mass: f64) -> f64 {
        self.mu_r * (self.mass_vehicle + load_mass) * self.g
    }
}

/// Time and positive traction work of a manoeuvre.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VTurnCost {
    pub time: f64,
    pub work: f64,
    /// A leg was too short for the requested speed, which was lowered.
    pub capped: bool,
}

impl std::ops::Add for VTurnCost {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            time: self.time + o.time,
            work: self.work + o.work,
            capped: self.capped || o.capped,
        }
    }
}

/// One explicit Euler step of `M dv/dt + C_r v = f`.
#[inline]
pub fn euler_step(v: f64, force: f64, mass: f64, c_r: f64, dt: f64) -> f64 {
    v + dt * (force - c_r * v) / mass
}

/// How a leg ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegEnd {
    /// Brake at constant deceleration to stop at the end.
    Stop,
    /// Drive into the pile: the last `approach_window` metres use the
    /// approach speed and there is no braking.
    Approach,
}

const MAX_STEPS: usize = 1_000_000;

/// Drives a leg of the given length from standstill.
pub fn integrate_leg(length: f64, load_mass: f64, end: LegEnd, vp: &VehicleParams) -> VTurnCost {
    if !(length > 1e-9) {
        return VTurnCost::default();
    }
    let mass = vp.mass_vehicle + load_mass;
    let c_r = vp.resistance(load_mass);
    let brake_force = mass * vp.brake_decel;
    let dt = vp.dt;

    // A leg that cannot accelerate to speed and brake again within half its
    // length is driven at a lower speed.
    let mut capped = false;
    let limit = (vp.brake_decel * length).sqrt();
    let cap = |target: f64, capped: &mut bool| {
        if end == LegEnd::Stop && target > limit {
            *capped = true;
            limit
        } else {
            target
        }
    };
    let cruise = cap(vp.target_speed, &mut capped);
    let approach = vp.approach_speed;

    let (mut s, mut v, mut t, mut work, mut throttle) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..MAX_STEPS {
        let remaining = length - s;
        if remaining <= 0.0 {
            break;
        }
        let braking = end == LegEnd::Stop && v > 0.0 && v * v / (2.0 * vp.brake_decel) >= remaining;
        let force = if braking {
            throttle = 0.0;
            -brake_force
        } else {
            let target = if end == LegEnd::Approach && remaining <= vp.approach_window {
                approach
            } else {
                cruise
            };
            let wanted = c_r * v + mass * (target - v) / vp.speed_response;
            let command = (wanted / vp.max_traction).clamp(0.0, 1.0);
            throttle = command.min(throttle + vp.throttle_rate * dt);
            throttle * vp.max_traction
        };
        let v_next = euler_step(v, force, mass, c_r, dt).max(0.0);
        work += force.max(0.0) * v * dt;
        t += dt;
        s += v_next * dt;
        v = v_next;
        if braking && v == 0.0 {
            break;
        }
    }
    VTurnCost { time: t, work, capped }
}
