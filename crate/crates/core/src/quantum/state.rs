use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use super::linalg::{
    self, c, hermitian_deviation, hermitian_eigen, is_finite, qubit_count, real, CMatrix, CVector,
    C64, HERMITIAN_TOL, NORM_TOL, ONE, PSD_TOL, TRACE_TOL, ZERO,
};
use super::{check_unique, joined_labels, owned_labels, positions, Evolve, Register, Tensor};
use crate::{Error, Result};

/// Single-qubit preparation and analysis kets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisKet {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
}

impl BasisKet {
    pub const ALL: [BasisKet; 5] = [
        BasisKet::Zero,
        BasisKet::One,
        BasisKet::Plus,
        BasisKet::Minus,
        BasisKet::PlusI,
    ];

    /// The tomographic family `{0, 1, +, i}`.
    pub const TOMOGRAPHIC: [BasisKet; 4] =
        [BasisKet::Zero, BasisKet::One, BasisKet::Plus, BasisKet::PlusI];

    pub fn amplitudes(self) -> [C64; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            BasisKet::Zero => [ONE, ZERO],
            BasisKet::One => [ZERO, ONE],
            BasisKet::Plus => [real(h), real(h)],
            BasisKet::Minus => [real(h), real(-h)],
            BasisKet::PlusI => [real(h), c(0.0, h)],
        }
    }

    pub fn vector(self) -> CVector {
        CVector::from_column_slice(&self.amplitudes())
    }

    pub fn projector(self) -> CMatrix {
        linalg::projector(&self.vector())
    }

    pub fn symbol(self) -> char {
        match self {
            BasisKet::Zero => '0',
            BasisKet::One => '1',
            BasisKet::Plus => '+',
            BasisKet::Minus => '-',
            BasisKet::PlusI => 'i',
        }
    }

    /// Parses `0`, `1`, `+`, `-` (or `−`), `i`.
    pub fn from_symbol(ch: char) -> Option<BasisKet> {
        match ch {
            '0' => Some(BasisKet::Zero),
            '1' => Some(BasisKet::One),
            '+' => Some(BasisKet::Plus),
            '-' | '−' => Some(BasisKet::Minus),
            'i' => Some(BasisKet::PlusI),
            _ => None,
        }
    }
}

impl fmt::Display for BasisKet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
    labels: Vec<String>,
}

impl PureState {
    pub fn new<S: AsRef<str>>(amplitudes: &[C64], labels: &[S]) -> Result<Self> {
        Self::from_vector(CVector::from_column_slice(amplitudes), owned_labels(labels))
    }

    pub fn from_vector(amplitudes: CVector, labels: Vec<String>) -> Result<Self> {
        let n = qubit_count(amplitudes.len())?;
        if n != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: 1 << labels.len(),
                got: amplitudes.len(),
            });
        }
        check_unique(&labels)?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm = amplitudes.norm();
        if (norm * norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm² = {}", norm * norm)));
        }
        Ok(Self { amplitudes, labels })
    }

    /// Normalizes before validating. Zero vectors are rejected.
    pub fn normalized(amplitudes: CVector, labels: Vec<String>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        Self::from_vector(amplitudes.unscale(norm), labels)
    }

    pub fn ket(label: &str, ket: BasisKet) -> Self {
        Self {
            amplitudes: ket.vector(),
            labels: vec![label.to_string()],
        }
    }

    /// Product state, e.g. `product(&[("q1", Plus), ("q4", Zero)])`.
    pub fn product(kets: &[(&str, BasisKet)]) -> Result<Self> {
        let labels: Vec<String> = kets.iter().map(|(l, _)| l.to_string()).collect();
        check_unique(&labels)?;
        let amplitudes = kets
            .iter()
            .fold(CVector::from_element(1, ONE), |acc, (_, k)| {
                acc.kronecker(&k.vector())
            });
        Ok(Self { amplitudes, labels })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn inner(&self, other: &PureState) -> Result<C64> {
        self.require_same_labels(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// `|<self|other>|²`.
    pub fn fidelity(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Copy with the phase of the largest-magnitude amplitude divided out.
    pub fn phase_normalized(&self) -> PureState {
        let pivot = self
            .amplitudes
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |(bi, bn), (i, z)| {
                if z.norm() > bn + 1e-12 {
                    (i, z.norm())
                } else {
                    (bi, bn)
                }
            })
            .0;
        let z = self.amplitudes[pivot];
        let phase = if z.norm() > 0.0 { z / z.norm() } else { ONE };
        PureState {
            amplitudes: self.amplitudes.map(|a| a / phase),
            labels: self.labels.clone(),
        }
    }

    /// Equality up to global phase, comparing amplitudes entrywise.
    pub fn approx_eq_up_to_phase(&self, other: &PureState, tol: f64) -> bool {
        if self.labels != other.labels {
            return false;
        }
        let a = self.phase_normalized();
        let b = other.phase_normalized();
        a.amplitudes
            .iter()
            .zip(b.amplitudes.iter())
            .all(|(x, y)| (x - y).norm() <= tol)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: linalg::projector(&self.amplitudes),
            labels: self.labels.clone(),
        }
    }

    /// Reorders the register to `order` (a permutation of the labels).
    pub fn reordered<S: AsRef<str>>(&self, order: &[S]) -> Result<PureState> {
        let pos = positions(&self.labels, order)?;
        if pos.len() != self.labels.len() {
            return Err(Error::DimensionMismatch {
                expected: self.labels.len(),
                got: pos.len(),
            });
        }
        Ok(PureState {
            amplitudes: linalg::permute_vector(&self.amplitudes, &pos),
            labels: owned_labels(order),
        })
    }

    fn require_same_labels(&self, other: &PureState) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::InvalidState(format!(
                "label mismatch: {:?} vs {:?}",
                self.labels, other.labels
            )));
        }
        Ok(())
    }
}

impl Register for PureState {
    fn labels(&self) -> &[String] {
        &self.labels
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            labels: joined_labels(&self.labels, &other.labels)?,
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
        })
    }
}

impl Evolve for PureState {
    fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self {
            amplitudes: u * &self.amplitudes,
            labels: self.labels.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
    labels: Vec<String>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix, labels: Vec<String>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let n = qubit_count(matrix.nrows())?;
        if n != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: 1 << labels.len(),
                got: matrix.nrows(),
            });
        }
        check_unique(&labels)?;
        if !is_finite(&matrix) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = linalg::trace(&matrix);
        if (tr - ONE).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace = {tr}")));
        }
        let (values, _) = hermitian_eigen(&matrix);
        if values[0] < -PSD_TOL {
            return Err(Error::NotPositive(values[0]));
        }
        Ok(Self { matrix, labels })
    }

    /// Hermitizes, clamps negative eigenvalues and renormalizes the trace.
    /// Meant for reconstructed or accumulated matrices carrying rounding drift.
    pub fn from_approximate(matrix: &CMatrix, labels: Vec<String>) -> Result<Self> {
        let (psd, _) = linalg::psd_projection(matrix);
        let tr = linalg::trace(&psd).re;
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::InvalidState("zero trace".into()));
        }
        Self::new(linalg::hermitian_part(&psd.unscale(tr)), labels)
    }

    pub fn maximally_mixed<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let dim = 1usize << labels.len();
        Self::new(
            CMatrix::identity(dim, dim).unscale(dim as f64),
            owned_labels(labels),
        )
    }

    pub(crate) fn from_parts_unchecked(matrix: CMatrix, labels: Vec<String>) -> Self {
        Self { matrix, labels }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// `Re Tr(Π ρ)` for a full-register operator `Π`.
    pub fn expectation(&self, op: &CMatrix) -> f64 {
        // Tr(Πρ) = Σ_ij Π_ij ρ_ji
        let mut acc = ZERO;
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                acc += op[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc.re
    }

    pub fn purity(&self) -> f64 {
        self.expectation(&self.matrix)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&self.matrix).0
    }

    /// `w·self + (1-w)·other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::OutOfRange {
                name: "weight",
                value: w,
                range: "[0, 1]",
            });
        }
        if self.labels != other.labels {
            return Err(Error::InvalidState("label mismatch in mixture".into()));
        }
        Ok(Self {
            matrix: self.matrix.scale(w) + other.matrix.scale(1.0 - w),
            labels: self.labels.clone(),
        })
    }

    /// Standard partial trace; the result is ordered as `keep`.
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<DensityMatrix> {
        if keep.is_empty() {
            return Err(Error::EmptySelection);
        }
        let keep_labels = owned_labels(keep);
        check_unique(&keep_labels)?;
        let pos = positions(&self.labels, keep)?;
        Ok(Self {
            matrix: linalg::partial_trace(&self.matrix, &pos, self.labels.len()),
            labels: keep_labels,
        })
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.labels != other.labels {
            return Err(Error::InvalidState("label mismatch".into()));
        }
        let (values, _) = hermitian_eigen(&(&self.matrix - &other.matrix));
        Ok(0.5 * values.iter().map(|v| v.abs()).sum::<f64>())
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(s: &PureState) -> Self {
        s.to_density()
    }
}

impl Register for DensityMatrix {
    fn labels(&self) -> &[String] {
        &self.labels
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            labels: joined_labels(&self.labels, &other.labels)?,
            matrix: self.matrix.kronecker(&other.matrix),
        })
    }
}

impl Evolve for DensityMatrix {
    fn conjugate_by(&self, u: &CMatrix) -> Self {
        Self {
            matrix: u * &self.matrix * u.adjoint(),
            labels: self.labels.clone(),
        }
    }
}
