//! Synthetic initial piles: a trapezoidal prism with gradient noise.

use noise::{NoiseFn, Perlin};
use serde::{Deserialize, Serialize};

use super::{FieldDims, HeightField};
use crate::{units, Error, Result};

/// Parameters of a synthetic pile.
///
/// The pile is a prism whose faces all rise at `front_slope` from the toe
/// lines `x = x_min`, `x = x_max`, `y = toe_y` (front) and `y = back_toe_y`,
/// capped at `crest_height`. Noise is faded in over the lowest
/// [`NOISE_FADE`] metres so flat ground stays at zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PileSpec {
    #[serde(rename = "crest_height_m")]
    pub crest_height: f64,
    #[serde(rename = "front_slope_deg", with = "units::degrees")]
    pub front_slope: f64,
    #[serde(rename = "noise_amplitude_m")]
    pub noise_amplitude: f64,
    #[serde(rename = "noise_frequency_per_m")]
    pub noise_frequency: f64,
    pub noise_octaves: u32,
    pub seed: u64,
    #[serde(rename = "toe_y_m")]
    pub toe_y: f64,
    #[serde(rename = "back_toe_y_m")]
    pub back_toe_y: f64,
    #[serde(rename = "x_min_m")]
    pub x_min: f64,
    #[serde(rename = "x_max_m")]
    pub x_max: f64,
}

/// Height over which the noise is blended in above the ground.
pub const NOISE_FADE: f64 = 0.3;

impl Default for PileSpec {
    fn default() -> Self {
        Self {
            crest_height: 1.8,
            front_slope: 30f64.to_radians(),
            noise_amplitude: 0.1,
            noise_frequency: 0.5,
            noise_octaves: 2,
            seed: 0,
            toe_y: 1.0,
            back_toe_y: 13.0,
            x_min: -11.0,
            x_max: 14.0,
        }
    }
}

impl PileSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.crest_height > 0.0) {
            return Err(Error::invalid("crest height must be positive"));
        }
        if !(self.front_slope > 0.0 && self.front_slope < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("front slope must be in (0, pi/2)"));
        }
        if !(self.noise_amplitude >= 0.0 && self.noise_frequency > 0.0) {
            return Err(Error::invalid("noise amplitude must be >= 0 and frequency > 0"));
        }
        if !(self.x_max > self.x_min && self.back_toe_y > self.toe_y) {
            return Err(Error::invalid("pile footprint is empty"));
        }
        Ok(())
    }

    /// Horizontal run of the front face from toe to crest.
    pub fn front_run(&self) -> f64 {
        self.crest_height / self.front_slope.tan()
    }

    fn prism(&self, x: f64, y: f64) -> f64 {
        let t = self.front_slope.tan();
        let rise = (t * (y - self.toe_y))
            .min(t * (self.back_toe_y - y))
            .min(t * (x - self.x_min))
            .min(t * (self.x_max - x));
        rise.min(self.crest_height).max(0.0)
    }
}

fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// Builds the initial pile. Deterministic for a given spec (including seed).
pub fn generate_pile(spec: &PileSpec, dims: FieldDims) -> Result<HeightField> {
    spec.validate()?;
    dims.validate()?;
    let (fx0, fx1, fy0, fy1) = dims.bounds();
    if spec.x_min < fx0 || spec.x_max > fx1 || spec.toe_y < fy0 || spec.back_toe_y > fy1 {
        return Err(Error::invalid(format!(
            "pile footprint [{}, {}] x [{}, {}] does not fit the field",
            spec.x_min, spec.x_max, spec.toe_y, spec.back_toe_y
        )));
    }
    if spec.noise_amplitude == 0.0 || spec.noise_octaves == 0 {
        return HeightField::from_fn(dims, |x, y| spec.prism(x, y));
    }

    let perlin = Perlin::new((spec.seed ^ (spec.seed >> 32)) as u32);
    let weights: Vec<f64> = (0..spec.noise_octaves).map(|o| 0.5f64.powi(o as i32)).collect();
    let norm: f64 = weights.iter().sum();
    HeightField::from_fn(dims, |x, y| {
        let base = spec.prism(x, y);
        if base <= 0.0 {
            return 0.0;
        }
        let mut n = 0.0;
        for (o, w) in weights.iter().enumerate() {
            let f = spec.noise_frequency * f64::from(1u32 << o);
            // Offsets keep octaves from sharing lattice-aligned zeros.
            n += w * perlin.get([x * f + 17.31 * o as f64, y * f - 9.77 * o as f64]);
        }
        let n = n / norm;
        (base + spec.noise_amplitude * n * smoothstep(base / NOISE_FADE)).max(0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> FieldDims {
        FieldDims::new(281, 161, 0.1, [-13.0, -1.0]).unwrap()
    }

    fn flat_spec() -> PileSpec {
        PileSpec {
            noise_amplitude: 0.0,
            ..PileSpec::default()
        }
    }

    #[test]
    fn prism_has_expected_crest_and_front_run() {
        let spec = flat_spec();
        let f = generate_pile(&spec, dims()).unwrap();
        let max = f.heights().iter().cloned().fold(0.0, f64::max);
        assert_eq!(max, 1.8);
        let run = spec.front_run();
        assert!((run - 1.8 / 30f64.to_radians().tan()).abs() < 1e-12);
        assert!((run - 3.1177).abs() < 1e-3);
        // Along x = 0: zero at the toe, crest from one run later on.
        assert!(f.sample(0.0, spec.toe_y).unwrap().abs() < 1e-12);
        assert!((f.sample(0.0, spec.toe_y + run + 0.1).unwrap() - 1.8).abs() < 1e-9);
        let mid = f.sample(0.0, spec.toe_y + run / 2.0).unwrap();
        assert!((mid - 0.9).abs() < 1e-9);
    }

    #[test]
    fn zero_amplitude_is_repeatable() {
        let a = generate_pile(&flat_spec(), dims()).unwrap();
        let b = generate_pile(&flat_spec(), dims()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn seeded_noise_is_bitwise_deterministic() {
        let spec = PileSpec {
            seed: 7,
            ..PileSpec::default()
        };
        let a = generate_pile(&spec, dims()).unwrap();
        let b = generate_pile(&spec, dims()).unwrap();
        assert!(a.heights().iter().zip(b.heights()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = generate_pile(&PileSpec { seed: 8, ..spec }, dims()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn noise_stays_off_flat_ground() {
        let spec = PileSpec {
            seed: 3,
            noise_amplitude: 0.3,
            ..PileSpec::default()
        };
        let f = generate_pile(&spec, dims()).unwrap();
        for j in 0..f.ny() {
            for i in 0..f.nx() {
                let [x, y] = f.dims().cell_center(i, j);
                if spec.prism(x, y) == 0.0 {
                    assert_eq!(f.get(i, j), 0.0);
                }
            }
        }
        let perturbed = f
            .heights()
            .iter()
            .zip(generate_pile(&flat_spec(), dims()).unwrap().heights())
            .filter(|(a, b)| a != b)
            .count();
        assert!(perturbed > 1000);
    }

    #[test]
    fn footprint_must_fit() {
        let spec = PileSpec {
            x_max: 40.0,
            ..flat_spec()
        };
        assert!(generate_pile(&spec, dims()).is_err());
    }
}
