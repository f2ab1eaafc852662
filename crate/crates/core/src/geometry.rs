//! Planar poses and angle helpers.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

/// A planar pose: position in metres and heading in radians.
///
/// The heading is the direction the vehicle faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    /// Unit vector along the heading.
    pub fn direction(&self) -> [f64; 2] {
        [self.heading.cos(), self.heading.sin()]
    }

    /// Unit vector 90 degrees counter-clockwise from the heading.
    pub fn left(&self) -> [f64; 2] {
        [-self.heading.sin(), self.heading.cos()]
    }

    /// Maps local coordinates (`u` along the heading, `v` to the left) to world.
    pub fn to_world(&self, u: f64, v: f64) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        [self.x + u * c - v * s, self.y + u * s + v * c]
    }

    /// Inverse of [`Pose::to_world`].
    pub fn to_local(&self, x: f64, y: f64) -> [f64; 2] {
        let (s, c) = self.heading.sin_cos();
        let dx = x - self.x;
        let dy = y - self.y;
        [dx * c + dy * s, -dx * s + dy * c]
    }

    /// The same position facing the opposite way.
    pub fn reversed(&self) -> Self {
        Self::new(self.x, self.y, normalize_angle(self.heading + PI))
    }
}

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
