use std::fmt;
use std::str::FromStr;

use crate::quantum::linalg::{CVector, C64, NORM_TOL};
use crate::quantum::{BasisKet, Gate, PureState};
use crate::{Error, Result};

pub const DATA_QUBITS: [&str; 2] = ["q1", "q4"];

/// Product inputs of the state-tomography batch.
pub const STATE_BATCH_INPUTS: [&str; 14] = [
    "00", "01", "0+", "0i", "10", "11", "1+", "1i", "++", "+i", "i0", "i1", "i+", "ii",
];

/// Inputs whose CNOT images are the four Bell states.
pub const BELL_INPUTS: [&str; 4] = ["+0", "+1", "-0", "-1"];

const TOKEN_GRAMMAR: &str = "two symbols from {0, 1, +, -, i}, e.g. \"+0\" (qubit 1 first)";

/// Input state `|Ψ>_14 = A1|00> + A2|01> + A3|10> + A4|11>` on the data qubits.
#[derive(Clone, Debug, PartialEq)]
pub enum InputStatePrep {
    Kets(BasisKet, BasisKet),
    Amplitudes([C64; 4]),
}

impl InputStatePrep {
    pub fn kets(q1: BasisKet, q4: BasisKet) -> Self {
        InputStatePrep::Kets(q1, q4)
    }

    /// Rejects amplitude vectors whose norm² is off by more than 1e-12.
    pub fn amplitudes(a: [C64; 4]) -> Result<Self> {
        let norm2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        if !norm2.is_finite() || (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("input norm² = {norm2}")));
        }
        Ok(InputStatePrep::Amplitudes(a))
    }

    pub fn state(&self) -> PureState {
        match *self {
            InputStatePrep::Kets(a, b) => {
                PureState::product(&[(DATA_QUBITS[0], a), (DATA_QUBITS[1], b)])
                    .expect("distinct data labels")
            }
            InputStatePrep::Amplitudes(a) => {
                PureState::from_vector(CVector::from_column_slice(&a), vec![
                    DATA_QUBITS[0].to_string(),
                    DATA_QUBITS[1].to_string(),
                ])
                .expect("validated on construction")
            }
        }
    }

    /// Ideal output `C14 |Ψ>_14`.
    pub fn ideal_output(&self) -> PureState {
        Gate::cnot(DATA_QUBITS[0], DATA_QUBITS[1])
            .and_then(|g| g.apply(&self.state()))
            .expect("input lives on the data qubits")
    }

    /// Short identifier used in transcripts and reports.
    pub fn token(&self) -> String {
        match self {
            InputStatePrep::Kets(a, b) => format!("{a}{b}"),
            InputStatePrep::Amplitudes(_) => "custom".to_string(),
        }
    }

    /// All 25 product tokens over `{0, 1, +, -, i}`.
    pub fn all_product_tokens() -> Vec<InputStatePrep> {
        let mut out = Vec::with_capacity(25);
        for a in BasisKet::ALL {
            for b in BasisKet::ALL {
                out.push(InputStatePrep::Kets(a, b));
            }
        }
        out
    }
}

impl fmt::Display for InputStatePrep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

impl FromStr for InputStatePrep {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let invalid = || Error::InvalidToken {
            token: s.to_string(),
            expected: TOKEN_GRAMMAR.to_string(),
        };
        let mut chars = s.chars();
        let a = chars.next().and_then(BasisKet::from_symbol).ok_or_else(invalid)?;
        let b = chars.next().and_then(BasisKet::from_symbol).ok_or_else(invalid)?;
        if chars.next().is_some() {
            return Err(invalid());
        }
        Ok(InputStatePrep::Kets(a, b))
    }
}
