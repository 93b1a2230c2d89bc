use crate::quantum::linalg::{self, frobenius, hermitian_eigen, CMatrix, ZERO};
use crate::quantum::{
    check_unique, owned_labels, pauli_basis, positions, DensityMatrix, Gate, Register,
};
use crate::{Error, Result};

pub const KRAUS_TOL: f64 = 1e-10;
pub const CHOI_PSD_TOL: f64 = 1e-9;

/// Completely positive trace-preserving map in Kraus form on named qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    kraus: Vec<CMatrix>,
    targets: Vec<String>,
}

impl Channel {
    /// Rejects Kraus sets violating `Σ K†K = I` by more than 1e-10.
    pub fn new<S: AsRef<str>>(kraus: Vec<CMatrix>, targets: &[S]) -> Result<Self> {
        let targets = owned_labels(targets);
        if targets.is_empty() || kraus.is_empty() {
            return Err(Error::EmptySelection);
        }
        check_unique(&targets)?;
        let dim = 1usize << targets.len();
        for k in &kraus {
            if k.nrows() != dim || k.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.nrows(),
                });
            }
        }
        let ch = Self { kraus, targets };
        let dev = ch.completeness_error();
        if !(dev <= KRAUS_TOL) {
            return Err(Error::NotTracePreserving(dev));
        }
        Ok(ch)
    }

    pub fn identity<S: AsRef<str>>(targets: &[S]) -> Self {
        let dim = 1usize << targets.len();
        Self {
            kraus: vec![linalg::identity(dim)],
            targets: owned_labels(targets),
        }
    }

    pub fn unitary(gate: &Gate) -> Self {
        Self {
            kraus: vec![gate.matrix().clone()],
            targets: gate.targets().to_vec(),
        }
    }

    /// `ρ -> (1-p) ρ + p Tr(ρ) I/d` via the uniform Pauli twirl.
    pub fn depolarizing<S: AsRef<str>>(p: f64, targets: &[S]) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfRange {
                name: "depolarizing p",
                value: p,
                range: "[0, 1]",
            });
        }
        let n = targets.len();
        let d2 = (1usize << (2 * n)) as f64;
        let kraus = pauli_basis(n)
            .into_iter()
            .enumerate()
            .map(|(m, (_, p_m))| {
                let w = if m == 0 { 1.0 - p + p / d2 } else { p / d2 };
                p_m.scale(w.sqrt())
            })
            .filter(|k| frobenius(k) > 0.0)
            .collect();
        Self::new(kraus, targets)
    }

    pub fn kraus_ops(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    /// Frobenius norm of `Σ K†K - I`.
    pub fn completeness_error(&self) -> f64 {
        let dim = 1usize << self.targets.len();
        let sum = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, k| acc + k.adjoint() * k);
        let dev = frobenius(&(sum - linalg::identity(dim)));
        if dev.is_finite() {
            dev
        } else {
            f64::INFINITY
        }
    }

    /// `J = Σ_ij |i><j| ⊗ E(|i><j|)`, input factor first.
    pub fn choi(&self) -> CMatrix {
        let dim = 1usize << self.targets.len();
        let mut j = CMatrix::zeros(dim * dim, dim * dim);
        for k in &self.kraus {
            // vec(K) with input index major: |K>> = Σ_i |i> ⊗ K|i>
            let v = linalg::CVector::from_fn(dim * dim, |idx, _| k[(idx % dim, idx / dim)]);
            j += &v * v.adjoint();
        }
        j
    }

    /// Smallest eigenvalue of the Choi matrix is above `-tol`.
    pub fn is_completely_positive(&self, tol: f64) -> bool {
        let (values, _) = hermitian_eigen(&self.choi());
        values[0] >= -tol
    }

    /// Applies the channel to a raw operator on `register`.
    pub fn apply_matrix(&self, m: &CMatrix, register: &[String]) -> Result<CMatrix> {
        let pos = positions(register, &self.targets)?;
        let n = register.len();
        if self.kraus.len() == 1 {
            let k = linalg::embed(&self.kraus[0], &pos, n);
            return Ok(&k * m * k.adjoint());
        }
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for k in &self.kraus {
            let k = linalg::embed(k, &pos, n);
            out += &k * m * k.adjoint();
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.matrix(), rho.labels())?;
        Ok(DensityMatrix::from_parts_unchecked(out, rho.labels().to_vec()))
    }

    /// `next ∘ self` on the union of both target sets.
    pub fn then(&self, next: &Channel) -> Result<Channel> {
        let mut targets = self.targets.clone();
        for t in &next.targets {
            if !targets.contains(t) {
                targets.push(t.clone());
            }
        }
        let n = targets.len();
        let a_pos = positions(&targets, &self.targets)?;
        let b_pos = positions(&targets, &next.targets)?;
        let mut kraus = Vec::with_capacity(self.kraus.len() * next.kraus.len());
        for b in &next.kraus {
            let b = linalg::embed(b, &b_pos, n);
            for a in &self.kraus {
                let k = &b * linalg::embed(a, &a_pos, n);
                if k.iter().any(|z| *z != ZERO) {
                    kraus.push(k);
                }
            }
        }
        Ok(Channel { kraus, targets })
    }
}

impl Register for Channel {
    fn labels(&self) -> &[String] {
        &self.targets
    }
}
