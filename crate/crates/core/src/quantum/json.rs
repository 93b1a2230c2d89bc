//! `{"labels": [...], "re": [[...]], "im": [[...]]}` matrix interchange.
//!
//! States are stored as single-column matrices. Doubles are written with
//! shortest round-trip formatting, so a write/read cycle is bit-exact.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::gate::Gate;
use super::linalg::{c, CMatrix, CVector};
use super::state::{DensityMatrix, PureState};
use super::Register;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub labels: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix, labels: &[String]) -> Self {
        let rows = |f: fn(&num_complex::Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        Self {
            labels: labels.to_vec(),
            re: rows(|z| z.re),
            im: rows(|z| z.im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let nrows = self.re.len();
        let ncols = self.re.first().map_or(0, Vec::len);
        if nrows == 0 || ncols == 0 {
            return Err(Error::InvalidState("empty matrix".into()));
        }
        if self.im.len() != nrows {
            return Err(Error::DimensionMismatch {
                expected: nrows,
                got: self.im.len(),
            });
        }
        for row in self.re.iter().chain(&self.im) {
            if row.len() != ncols {
                return Err(Error::DimensionMismatch {
                    expected: ncols,
                    got: row.len(),
                });
            }
        }
        Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
            c(self.re[i][j], self.im[i][j])
        }))
    }
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(self.matrix(), self.labels()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        let m = j.to_matrix().map_err(D::Error::custom)?;
        DensityMatrix::new(m, j.labels).map_err(D::Error::custom)
    }
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let col = CMatrix::from_column_slice(self.dim(), 1, self.amplitudes().as_slice());
        MatrixJson::from_matrix(&col, self.labels()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        let m = j.to_matrix().map_err(D::Error::custom)?;
        if m.ncols() != 1 {
            return Err(D::Error::custom("state must be a single column"));
        }
        let v = CVector::from_column_slice(m.as_slice());
        PureState::from_vector(v, j.labels).map_err(D::Error::custom)
    }
}

impl Serialize for Gate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(self.matrix(), self.targets()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Gate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = MatrixJson::deserialize(d)?;
        let m = j.to_matrix().map_err(D::Error::custom)?;
        Gate::new(m, &j.labels).map_err(D::Error::custom)
    }
}
