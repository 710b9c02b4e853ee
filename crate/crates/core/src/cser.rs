//! Serde adapters writing complex numbers as `[re, im]` pairs.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::equation::C64;

pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
    let [re, im] = <[f64; 2]>::deserialize(d)?;
    Ok(C64::new(re, im))
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Matrices as lists of columns.
pub mod mat {
    use super::*;
    use crate::linalg::CMatrix;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        m.column_iter()
            .map(|c| c.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let cols = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let rows = cols.first().map(|c| c.len()).unwrap_or(0);
        Ok(CMatrix::from_fn(rows, cols.len(), |i, j| C64::new(cols[j][i][0], cols[j][i][1])))
    }
}
