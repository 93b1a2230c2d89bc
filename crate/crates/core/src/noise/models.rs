use std::f64::consts::FRAC_1_SQRT_2;

use super::channel::Channel;
use crate::quantum::linalg::{self, real, CMatrix, CVector, ZERO};
use crate::quantum::{owned_labels, DensityMatrix, Gate, Pauli};
use crate::{Error, Result};

fn check(name: &'static str, value: f64, hi: f64, range: &'static str) -> Result<()> {
    if value.is_finite() && (0.0..=hi).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}

/// `p |Φ><Φ| + (1-p) I/4` on the EPR qubits `q2`, `q3`.
pub fn werner(p: f64) -> Result<DensityMatrix> {
    werner_on(p, ["q2", "q3"])
}

pub fn werner_on(p: f64, labels: [&str; 2]) -> Result<DensityMatrix> {
    check("werner_p", p, 1.0, "[0, 1]")?;
    let h = real(FRAC_1_SQRT_2);
    let phi = CVector::from_column_slice(&[h, ZERO, ZERO, h]);
    let m = linalg::projector(&phi).scale(p) + linalg::identity(4).scale((1.0 - p) / 4.0);
    DensityMatrix::new(m, owned_labels(&labels))
}

/// CNOT whose target suffers a bit error with probability `eps`:
/// `K0 = √(1-ε) CNOT`, `K1 = √ε (I⊗X) CNOT`. At `eps = 0` only `K0` is kept.
pub fn leaky_cnot(eps: f64, control: &str, target: &str) -> Result<Channel> {
    check("extinction_eps", eps, 0.5, "[0, 0.5]")?;
    let cnot = Gate::cnot(control, target)?;
    let u = cnot.matrix();
    let mut kraus = vec![u.scale((1.0 - eps).sqrt())];
    if eps > 0.0 {
        let flip = linalg::identity(2).kronecker(&Pauli::X.matrix());
        kraus.push((flip * u).scale(eps.sqrt()));
    }
    Channel::new(kraus, &[control, target])
}

/// Scales the coherences between the two halves of the first qubit by `v`:
/// `K0 = √((1+v)/2) I`, `K1 = √((1-v)/2) Z⊗I`.
pub fn dephase_pair(v: f64, labels: [&str; 2]) -> Result<Channel> {
    check("visibility_v", v, 1.0, "[0, 1]")?;
    let id = linalg::identity(4);
    let z1 = Pauli::Z.matrix().kronecker(&linalg::identity(2));
    let mut kraus = vec![id.scale(((1.0 + v) / 2.0).sqrt())];
    if v < 1.0 {
        kraus.push(z1.scale(((1.0 - v) / 2.0).sqrt()));
    }
    Channel::new(kraus, &labels)
}

/// Phase flip with probability `g` on one qubit.
pub fn phase_flip(g: f64, label: &str) -> Result<Channel> {
    check("gate_dephasing", g, 0.5, "[0, 0.5]")?;
    let mut kraus: Vec<CMatrix> = vec![linalg::identity(2).scale((1.0 - g).sqrt())];
    if g > 0.0 {
        kraus.push(Pauli::Z.matrix().scale(g.sqrt()));
    }
    Channel::new(kraus, &[label])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::linalg::frobenius;
    use crate::quantum::{BasisKet, PureState, Register};
    use crate::noise::channel::{CHOI_PSD_TOL, KRAUS_TOL};

    fn phi() -> DensityMatrix {
        werner(1.0).unwrap()
    }

    #[test]
    fn werner_limits() {
        let ideal = phi();
        assert!((ideal.matrix()[(0, 3)].re - 0.5).abs() < 1e-15);
        assert!((ideal.purity() - 1.0).abs() < 1e-12);
        let mixed = werner(0.0).unwrap();
        assert!(frobenius(&(mixed.matrix() - linalg::identity(4).scale(0.25))) < 1e-15);
        assert!(werner(1.2).is_err());
        assert!(werner(-0.1).is_err());
    }

    #[test]
    fn werner_overlap_closed_form() {
        for p in [0.0, 0.5, 0.9] {
            let rho = werner(p).unwrap();
            let f = rho.expectation(phi().matrix());
            assert!((f - (1.0 + 3.0 * p) / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn werner_partial_trace_is_maximally_mixed() {
        // brute-force 4×4 trace: ρ_A[a,b] = Σ_t ρ[2a+t, 2b+t]
        let rho = werner(0.5).unwrap();
        let m = rho.matrix();
        let reduced = rho.partial_trace(&["q2"]).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let brute = m[(2 * a, 2 * b)] + m[(2 * a + 1, 2 * b + 1)];
                assert!((reduced.matrix()[(a, b)] - brute).norm() < 1e-15);
            }
        }
        assert!(frobenius(&(reduced.matrix() - linalg::identity(2).scale(0.5))) < 1e-15);
    }

    #[test]
    fn leaky_cnot_reduces_to_unitary() {
        let ch = leaky_cnot(0.0, "a", "b").unwrap();
        assert_eq!(ch.kraus_ops().len(), 1);
        assert_eq!(&ch.kraus_ops()[0], Gate::cnot("a", "b").unwrap().matrix());
        assert!(leaky_cnot(0.6, "a", "b").is_err());
    }

    #[test]
    fn leaky_cnot_on_one_zero() {
        let ch = leaky_cnot(0.01, "a", "b").unwrap();
        let rho = PureState::product(&[("a", BasisKet::One), ("b", BasisKet::Zero)])
            .unwrap()
            .to_density();
        let out = ch.apply(&rho).unwrap();
        assert!((out.matrix()[(3, 3)].re - 0.99).abs() < 1e-12);
        assert!((out.matrix()[(2, 2)].re - 0.01).abs() < 1e-12);
    }

    #[test]
    fn dephase_pair_examples() {
        let ch = dephase_pair(1.0, ["q2", "q3"]).unwrap();
        assert_eq!(ch.apply(&phi()).unwrap(), phi());
        let ch = dephase_pair(0.0, ["q2", "q3"]).unwrap();
        let out = ch.apply(&phi()).unwrap();
        let expected = linalg::real_matrix(
            4,
            &[
                0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5,
            ],
        );
        assert!(frobenius(&(out.matrix() - expected)) < 1e-15);
        let ch = dephase_pair(0.8, ["q2", "q3"]).unwrap();
        let out = ch.apply(&phi()).unwrap();
        assert!((out.matrix()[(0, 3)].re - 0.4).abs() < 1e-15);
        assert_eq!(out.labels(), ["q2", "q3"]);
    }

    #[test]
    fn all_channels_are_cptp() {
        let mut channels = Vec::new();
        for x in [0.0, 0.013, 0.25, 0.5] {
            channels.push(leaky_cnot(x, "a", "b").unwrap());
            channels.push(dephase_pair(1.0 - x, ["a", "b"]).unwrap());
            channels.push(phase_flip(x, "a").unwrap());
            channels.push(Channel::depolarizing(2.0 * x, &["a", "b"]).unwrap());
        }
        for ch in &channels {
            assert!(ch.completeness_error() < KRAUS_TOL);
            assert!(ch.is_completely_positive(CHOI_PSD_TOL));
        }
    }
}
