//! Amplitude-level check of the four-branch teleportation identity
//! `C34 C12 (|Ψ>_14 ⊗ |Φ>_23) = ½ Σ_o |o>_23 ⊗ phase_o P_o C14 |Ψ>_14`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::engine::{correction_for, LocalGates, Orientation, Outcome, Protocol};
use super::prep::DATA_QUBITS;
use crate::quantum::linalg::{c, real, CVector};
use crate::quantum::{Gate, PureState};
use crate::Result;

/// Haar-distributed state on the data qubits.
pub fn random_data_state(rng: &mut impl rand::Rng) -> PureState {
    let v = CVector::from_fn(4, |_, _| {
        c(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    PureState::normalized(v, DATA_QUBITS.iter().map(|s| s.to_string()).collect())
        .expect("gaussian vector is nonzero")
}

/// Largest amplitude deviation between the branch vectors and the identity's
/// right-hand side for one input.
pub fn identity_deviation(protocol: &Protocol, psi: &PureState) -> Result<f64> {
    let branches = protocol.run_pure(psi)?;
    let target = Gate::cnot("q1", "q4")?.apply(psi)?;
    let mut worst: f64 = 0.0;
    for (o, branch) in Outcome::ALL.iter().zip(branches) {
        let corr = correction_for(*o);
        let expected = (corr.matrix() * target.amplitudes()).scale(0.5 * f64::from(corr.phase));
        worst = worst.max((branch - expected).norm());
    }
    Ok(worst)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrientationAudit {
    pub c12: Orientation,
    pub c34: Orientation,
    pub max_deviation: f64,
    pub satisfies_identity: bool,
}

/// Tests every `(C12, C34)` orientation against the correction table on the
/// computational basis, `|+0>` and `samples` random inputs.
pub fn orientation_audit(samples: usize, seed: u64) -> Result<Vec<OrientationAudit>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inputs: Vec<PureState> = (0..4)
        .map(|k| {
            let v = CVector::from_fn(4, |i, _| real(if i == k { 1.0 } else { 0.0 }));
            PureState::normalized(v, DATA_QUBITS.iter().map(|s| s.to_string()).collect())
                .expect("basis vector")
        })
        .collect();
    inputs.extend((0..samples).map(|_| random_data_state(&mut rng)));

    let mut out = Vec::with_capacity(4);
    for c12 in [Orientation::Forward, Orientation::Reverse] {
        for c34 in [Orientation::Forward, Orientation::Reverse] {
            let protocol = Protocol::new(LocalGates::with_orientation(c12, c34));
            let mut worst: f64 = 0.0;
            for psi in &inputs {
                worst = worst.max(identity_deviation(&protocol, psi)?);
            }
            out.push(OrientationAudit {
                c12,
                c34,
                max_deviation: worst,
                satisfies_identity: worst < 1e-10,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_forward_forward_satisfies_identity() {
        let audit = orientation_audit(20, 7).unwrap();
        assert_eq!(audit.len(), 4);
        let passing: Vec<_> = audit.iter().filter(|a| a.satisfies_identity).collect();
        assert_eq!(passing.len(), 1);
        assert_eq!(passing[0].c12, Orientation::Forward);
        assert_eq!(passing[0].c34, Orientation::Forward);
        for a in audit.iter().filter(|a| !a.satisfies_identity) {
            assert!(a.max_deviation > 0.1, "{a:?}");
        }
    }
}
