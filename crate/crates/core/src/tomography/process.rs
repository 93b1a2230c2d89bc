use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::metrics::uhlmann_fidelity;
use super::report::{FidelityKind, FidelityReport};
use crate::noise::Channel;
use crate::quantum::linalg::{self, hermitian_deviation, hermitian_eigen, CMatrix, CVector, ZERO};
use crate::quantum::{pauli_basis, Gate, MatrixJson, Register};
use crate::{Error, Result};

pub const CHI_HERMITIAN_TOL: f64 = 1e-8;
pub const CHI_PSD_TOL: f64 = 1e-8;
pub const CHI_TP_TOL: f64 = 1e-6;

/// `|A>>` with `(i·d + r) = A[r, i]`, matching the input-first Choi layout.
pub(crate) fn vectorize(a: &CMatrix) -> CVector {
    let d = a.nrows();
    CVector::from_fn(d * d, |idx, _| a[(idx % d, idx / d)])
}

/// `E(ρ) = Tr_in[(ρᵀ ⊗ I) J]`.
pub fn apply_choi(j: &CMatrix, rho: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let mut out = CMatrix::zeros(d, d);
    for a in 0..d {
        for b in 0..d {
            let w = rho[(a, b)];
            if w == ZERO {
                continue;
            }
            out += j.view((a * d, b * d), (d, d)) * w;
        }
    }
    out
}

/// `Tr_out J`, a `d×d` matrix on the input factor.
pub fn choi_output_trace(j: &CMatrix, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |a, b| linalg::trace(&j.view((a * d, b * d), (d, d)).into_owned()))
}

/// Process matrix in the Pauli basis: `E(ρ) = Σ_mn χ_mn P_m ρ P_n†`,
/// indices ordered `II, IX, IY, IZ, XI, …` with the first label major.
#[derive(Clone, Debug, PartialEq)]
pub struct ChiMatrix {
    matrix: CMatrix,
    labels: Vec<String>,
}

impl ChiMatrix {
    /// Validates Hermiticity, positivity and trace preservation.
    pub fn new(matrix: CMatrix, labels: Vec<String>) -> Result<Self> {
        let n = labels.len();
        let dim = 1usize << (2 * n);
        if matrix.shape() != (dim, dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.nrows(),
            });
        }
        crate::quantum::check_unique(&labels)?;
        let dev = hermitian_deviation(&matrix);
        if dev > CHI_HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let (values, _) = hermitian_eigen(&matrix);
        if values[0] < -CHI_PSD_TOL {
            return Err(Error::NotPositive(values[0]));
        }
        let chi = Self { matrix, labels };
        let tp = chi.trace_preservation_error();
        if tp > CHI_TP_TOL {
            return Err(Error::NotTracePreserving(tp));
        }
        Ok(chi)
    }

    /// `χ_mn = <<P_m|J|P_n>> / d²`.
    pub fn from_choi(j: &CMatrix, labels: Vec<String>) -> Result<Self> {
        Self::new(choi_to_chi(j, labels.len()), labels)
    }

    pub fn from_unitary(gate: &Gate) -> Result<Self> {
        Self::from_channel(&Channel::unitary(gate))
    }

    pub fn from_channel(channel: &Channel) -> Result<Self> {
        Self::from_choi(&channel.choi(), channel.targets().to_vec())
    }

    /// Identity process on `labels`.
    pub fn identity<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        let targets = crate::quantum::owned_labels(labels);
        Self::from_channel(&Channel::identity(&targets))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn num_qubits(&self) -> usize {
        self.labels.len()
    }

    pub fn to_choi(&self) -> CMatrix {
        let basis = pauli_basis(self.num_qubits());
        let vecs: Vec<CVector> = basis.iter().map(|(_, p)| vectorize(p)).collect();
        let d2 = vecs[0].len();
        let mut j = CMatrix::zeros(d2, d2);
        for (m, vm) in vecs.iter().enumerate() {
            for (n, vn) in vecs.iter().enumerate() {
                let c = self.matrix[(m, n)];
                if c != ZERO {
                    j += vm * vn.adjoint() * c;
                }
            }
        }
        j
    }

    /// `‖Σ_mn χ_mn P_n† P_m − I‖_F`.
    pub fn trace_preservation_error(&self) -> f64 {
        let basis = pauli_basis(self.num_qubits());
        let d = basis[0].1.nrows();
        let mut acc = CMatrix::zeros(d, d);
        for (m, (_, pm)) in basis.iter().enumerate() {
            for (n, (_, pn)) in basis.iter().enumerate() {
                let c = self.matrix[(m, n)];
                if c != ZERO {
                    acc += pn.adjoint() * pm * c;
                }
            }
        }
        linalg::frobenius(&(acc - CMatrix::identity(d, d)))
    }

    /// `R_ij = Tr(P_i E(P_j)) / d`.
    pub fn to_ptm(&self) -> PauliTransferMatrix {
        let basis = pauli_basis(self.num_qubits());
        let j = self.to_choi();
        let d = basis[0].1.nrows();
        let images: Vec<CMatrix> = basis.iter().map(|(_, p)| apply_choi(&j, p)).collect();
        let n = basis.len();
        let entries = nalgebra::DMatrix::from_fn(n, n, |i, k| {
            (&basis[i].1 * &images[k]).trace().re / d as f64
        });
        PauliTransferMatrix {
            labels: basis.into_iter().map(|(l, _)| l).collect(),
            entries,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl Register for ChiMatrix {
    fn labels(&self) -> &[String] {
        &self.labels
    }
}

impl Serialize for ChiMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from_matrix(&self.matrix, &self.labels).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ChiMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        let m = raw.to_matrix().map_err(serde::de::Error::custom)?;
        ChiMatrix::new(m, raw.labels).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn choi_to_chi(j: &CMatrix, n: usize) -> CMatrix {
    let basis = pauli_basis(n);
    let d2 = (basis[0].1.nrows() as f64).powi(2);
    let vecs: Vec<CVector> = basis.iter().map(|(_, p)| vectorize(p)).collect();
    let jv: Vec<CVector> = vecs.iter().map(|v| j * v).collect();
    let k = basis.len();
    let chi = CMatrix::from_fn(k, k, |m, n| vecs[m].dotc(&jv[n]) / d2);
    linalg::hermitian_part(&chi)
}

/// Real Pauli-transfer matrix with row and column labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliTransferMatrix {
    pub labels: Vec<String>,
    pub entries: nalgebra::DMatrix<f64>,
}

impl PauliTransferMatrix {
    /// Header `row,<labels…>`, then one labelled row per output Pauli.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Config(format!("csv: {e}"));
        let mut header = vec!["row".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header).map_err(err)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend((0..self.labels.len()).map(|k| self.entries[(i, k)].to_string()));
            w.write_record(&row).map_err(err)?;
        }
        w.into_inner()
            .map_err(|e| Error::Config(format!("csv buffer: {e}")))
    }
}

/// Uhlmann fidelity of the unit-trace-normalized process matrices.
pub fn process_fidelity(measured: &ChiMatrix, ideal: &ChiMatrix) -> Result<FidelityReport> {
    if measured.labels != ideal.labels {
        return Err(Error::InvalidState("process label mismatch".into()));
    }
    let f = uhlmann_fidelity(measured.matrix(), ideal.matrix())?;
    Ok(FidelityReport::new(
        FidelityKind::Process,
        f,
        1 << measured.num_qubits(),
    ))
}
