//! JSON encoding of complex numbers as `[re, im]` pairs.
//!
//! Used via `#[serde(with = "crate::cplx")]` on scalar fields and
//! `#[serde(with = "crate::cplx::vec")]` on `Vec<Complex64>` fields, so that
//! configs and reports read `[0.5, -1.0]` instead of a nested struct.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    let [re, im] = <[f64; 2]>::deserialize(d)?;
    Ok(Complex64::new(re, im))
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(zs: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = zs.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Holder {
        #[serde(with = "crate::cplx")]
        z: Complex64,
        #[serde(with = "crate::cplx::vec")]
        zs: Vec<Complex64>,
    }

    #[test]
    fn round_trip_and_shape() {
        let h = Holder {
            z: Complex64::new(0.5, -1.0),
            zs: vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)],
        };
        let text = serde_json::to_string(&h).unwrap();
        assert_eq!(text, r#"{"z":[0.5,-1.0],"zs":[[1.0,0.0],[0.0,2.0]]}"#);
        let back: Holder = serde_json::from_str(&text).unwrap();
        assert_eq!(back, h);
    }
}
