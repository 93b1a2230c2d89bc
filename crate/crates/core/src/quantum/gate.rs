use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

use super::linalg::{self, c, frobenius, CMatrix, C64, UNITARY_TOL};
use super::pauli::Pauli;
use super::{check_unique, joined_labels, owned_labels, positions, Evolve, Register, Tensor};
use crate::{Error, Result};

/// A unitary acting on named qubits. For controlled gates the control comes
/// first in `targets`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    matrix: CMatrix,
    targets: Vec<String>,
}

impl Gate {
    pub fn new<S: AsRef<str>>(matrix: CMatrix, targets: &[S]) -> Result<Self> {
        let targets = owned_labels(targets);
        if targets.is_empty() {
            return Err(Error::EmptySelection);
        }
        check_unique(&targets)?;
        let dim = 1usize << targets.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        if !linalg::is_finite(&matrix) {
            return Err(Error::InvalidState("non-finite gate entry".into()));
        }
        let dev = frobenius(&(matrix.adjoint() * &matrix - linalg::identity(dim)));
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self { matrix, targets })
    }

    pub fn identity(label: &str) -> Self {
        Self::pauli(label, Pauli::I)
    }

    pub fn pauli(label: &str, p: Pauli) -> Self {
        Self {
            matrix: p.matrix(),
            targets: vec![label.to_string()],
        }
    }

    pub fn x(label: &str) -> Self {
        Self::pauli(label, Pauli::X)
    }

    pub fn y(label: &str) -> Self {
        Self::pauli(label, Pauli::Y)
    }

    pub fn z(label: &str) -> Self {
        Self::pauli(label, Pauli::Z)
    }

    pub fn h(label: &str) -> Self {
        let h = FRAC_1_SQRT_2;
        Self {
            matrix: linalg::real_matrix(2, &[h, h, h, -h]),
            targets: vec![label.to_string()],
        }
    }

    /// CNOT with `control` flipping `target`.
    pub fn cnot(control: &str, target: &str) -> Result<Self> {
        #[rustfmt::skip]
        let m = linalg::real_matrix(4, &[
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            0.0, 0.0, 1.0, 0.0,
        ]);
        Self::new(m, &[control, target])
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn dagger(&self) -> Gate {
        Self {
            matrix: self.matrix.adjoint(),
            targets: self.targets.clone(),
        }
    }

    /// Full-register operator with identity padding.
    pub fn embedded(&self, register: &[String]) -> Result<CMatrix> {
        let pos = positions(register, &self.targets)?;
        Ok(linalg::embed(&self.matrix, &pos, register.len()))
    }

    pub fn apply<S: Evolve>(&self, state: &S) -> Result<S> {
        let u = self.embedded(state.labels())?;
        Ok(state.conjugate_by(&u))
    }

    /// `next ∘ self` on the union of both target sets (self's targets first).
    pub fn then(&self, next: &Gate) -> Result<Gate> {
        let mut targets = self.targets.clone();
        for t in &next.targets {
            if !targets.contains(t) {
                targets.push(t.clone());
            }
        }
        let a = self.embedded(&targets)?;
        let b = next.embedded(&targets)?;
        Ok(Gate {
            matrix: b * a,
            targets,
        })
    }
}

impl Register for Gate {
    fn labels(&self) -> &[String] {
        &self.targets
    }
}

impl Tensor for Gate {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            targets: joined_labels(&self.targets, &other.targets)?,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WavePlate {
    Half,
    Quarter,
}

/// Jones matrix of a wave plate with fast axis at `angle` radians from H.
///
/// `HWP(θ) = [[cos2θ, sin2θ], [sin2θ, -cos2θ]]`,
/// `QWP(θ) = e^{-iπ/4} [[cos²θ + i sin²θ, (1-i) sinθ cosθ], [(1-i) sinθ cosθ, sin²θ + i cos²θ]]`.
pub fn waveplate(kind: WavePlate, angle: f64, label: &str) -> Gate {
    let (s, co) = angle.sin_cos();
    let matrix = match kind {
        WavePlate::Half => {
            let (s2, c2) = (2.0 * angle).sin_cos();
            linalg::real_matrix(2, &[c2, s2, s2, -c2])
        }
        WavePlate::Quarter => {
            let phase = C64::from_polar(1.0, -FRAC_PI_4);
            let off = c(1.0, -1.0) * s * co;
            CMatrix::from_row_slice(
                2,
                2,
                &[
                    c(co * co, s * s) * phase,
                    off * phase,
                    off * phase,
                    c(s * s, co * co) * phase,
                ],
            )
        }
    };
    Gate {
        matrix,
        targets: vec![label.to_string()],
    }
}
