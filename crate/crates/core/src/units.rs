//! Serde helpers for values stored in radians but written in degrees.

pub mod degrees {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rad: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(rad.to_degrees())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(f64::deserialize(d)?.to_radians())
    }
}

/// `[x_m, y_m, heading_deg]` triples.
pub mod pose_m_deg {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::geometry::Pose;

    pub fn serialize<S: Serializer>(p: &Pose, s: S) -> Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&[p.x, p.y, p.heading.to_degrees()], s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Pose, D::Error> {
        let [x, y, h] = <[f64; 3]>::deserialize(d)?;
        Ok(Pose::new(x, y, h.to_radians()))
    }
}
