use super::linalg::{c, real, CMatrix, ONE, ZERO};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        let e = match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, real(-1.0)],
        };
        CMatrix::from_row_slice(2, 2, &e)
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// The unnormalized `n`-qubit Pauli basis with labels, index `m = Σ a_k 4^(n-1-k)`.
pub fn pauli_basis(n: usize) -> Vec<(String, CMatrix)> {
    let mut basis = vec![(String::new(), CMatrix::identity(1, 1))];
    for _ in 0..n {
        basis = basis
            .into_iter()
            .flat_map(|(label, m)| {
                Pauli::ALL.into_iter().map(move |p| {
                    (format!("{label}{}", p.symbol()), m.kronecker(&p.matrix()))
                })
            })
            .collect();
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::linalg::{frobenius, identity, trace};

    #[test]
    fn paulis_square_to_identity() {
        for p in Pauli::ALL {
            let m = p.matrix();
            assert!(frobenius(&(&m * &m - identity(2))) < 1e-12);
        }
    }

    #[test]
    fn two_qubit_basis_is_orthogonal() {
        let basis = pauli_basis(2);
        assert_eq!(basis.len(), 16);
        assert_eq!(basis[6].0, "XY");
        for (i, (_, a)) in basis.iter().enumerate() {
            for (j, (_, b)) in basis.iter().enumerate() {
                let t = trace(&(a.adjoint() * b));
                let expected = if i == j { 4.0 } else { 0.0 };
                assert!((t - real(expected)).norm() < 1e-12);
            }
        }
    }
}
