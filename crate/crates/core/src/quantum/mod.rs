//! Few-qubit states and operators over labelled registers.

mod bell;
mod gate;
mod json;
pub mod linalg;
mod pauli;
mod state;

pub use bell::{bell_state, bell_state_on, BellConvention, BellName};
pub use gate::{waveplate, Gate, WavePlate};
pub use json::MatrixJson;
pub use linalg::{CMatrix, CVector, C64};
pub use pauli::{pauli_basis, Pauli};
pub use state::{BasisKet, DensityMatrix, PureState};

use crate::{Error, Result};

/// Anything carrying an ordered list of qubit labels.
pub trait Register {
    fn labels(&self) -> &[String];

    fn num_qubits(&self) -> usize {
        self.labels().len()
    }

    fn dim(&self) -> usize {
        1 << self.num_qubits()
    }
}

/// Kronecker product with label concatenation.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

/// Evolution under a full-register operator.
pub trait Evolve: Register + Sized {
    /// `U ψ` for vectors, `U ρ U†` for density matrices.
    fn conjugate_by(&self, u: &CMatrix) -> Self;
}

pub(crate) fn owned_labels<S: AsRef<str>>(labels: &[S]) -> Vec<String> {
    labels.iter().map(|s| s.as_ref().to_string()).collect()
}

pub(crate) fn check_unique(labels: &[String]) -> Result<()> {
    for (i, a) in labels.iter().enumerate() {
        if labels[..i].contains(a) {
            return Err(Error::LabelCollision(a.clone()));
        }
    }
    Ok(())
}

pub(crate) fn joined_labels(a: &[String], b: &[String]) -> Result<Vec<String>> {
    let joined: Vec<String> = a.iter().chain(b).cloned().collect();
    check_unique(&joined)?;
    Ok(joined)
}

/// Register positions of `targets` within `register`.
pub fn positions<S: AsRef<str>>(register: &[String], targets: &[S]) -> Result<Vec<usize>> {
    targets
        .iter()
        .map(|t| {
            let t = t.as_ref();
            register
                .iter()
                .position(|l| l == t)
                .ok_or_else(|| Error::UnknownLabel(t.to_string()))
        })
        .collect()
}
