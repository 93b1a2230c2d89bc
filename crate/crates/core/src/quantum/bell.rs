use std::fmt;
use std::str::FromStr;

use super::linalg::CVector;
use super::state::{BasisKet, PureState};
use super::owned_labels;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellName {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellName {
    pub const ALL: [BellName; 4] = [
        BellName::PhiPlus,
        BellName::PhiMinus,
        BellName::PsiPlus,
        BellName::PsiMinus,
    ];

    fn sign(self) -> f64 {
        match self {
            BellName::PhiPlus | BellName::PsiPlus => 1.0,
            BellName::PhiMinus | BellName::PsiMinus => -1.0,
        }
    }

    fn is_phi(self) -> bool {
        matches!(self, BellName::PhiPlus | BellName::PhiMinus)
    }
}

impl fmt::Display for BellName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellName::PhiPlus => "phi+",
            BellName::PhiMinus => "phi-",
            BellName::PsiPlus => "psi+",
            BellName::PsiMinus => "psi-",
        })
    }
}

impl FromStr for BellName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BellName::ALL
            .into_iter()
            .find(|b| b.to_string() == s)
            .ok_or_else(|| Error::InvalidToken {
                token: s.to_string(),
                expected: "one of phi+, phi-, psi+, psi-".into(),
            })
    }
}

/// Which two-qubit basis the Bell names refer to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BellConvention {
    /// `Φ± = (|00> ± |11>)/√2`, `Ψ± = (|01> ± |10>)/√2`.
    Standard,
    /// `Φ± = (|0>|+> ± |1>|->)/√2`, `Ψ± = (|0>|-> ± |1>|+>)/√2`, i.e. the
    /// standard states with a Hadamard on the second qubit.
    RotatedTarget,
}

/// Bell state on the data qubits `q1`, `q4`.
pub fn bell_state(name: BellName, convention: BellConvention) -> PureState {
    bell_state_on(name, convention, ["q1", "q4"]).expect("distinct labels")
}

pub fn bell_state_on(
    name: BellName,
    convention: BellConvention,
    labels: [&str; 2],
) -> Result<PureState> {
    let (even, odd) = match convention {
        BellConvention::Standard => (BasisKet::Zero, BasisKet::One),
        BellConvention::RotatedTarget => (BasisKet::Plus, BasisKet::Minus),
    };
    let (first, second) = if name.is_phi() { (even, odd) } else { (odd, even) };
    let zero = BasisKet::Zero.vector();
    let one = BasisKet::One.vector();
    let v: CVector = zero.kronecker(&first.vector())
        + one.kronecker(&second.vector()).scale(name.sign());
    PureState::normalized(v, owned_labels(&labels))
}
