use log::warn;

use super::report::{FidelityKind, FidelityReport};
use crate::quantum::linalg::{self, hermitian_eigen, spectral_map, CMatrix, CVector};
use crate::quantum::{DensityMatrix, Register};
use crate::{Error, Result};

/// Clamped eigenvalue mass above which a warning is logged.
pub const CLAMP_WARN_MASS: f64 = 1e-6;
/// Most negative eigenvalue (relative to the trace) accepted before clamping.
pub const FIDELITY_PSD_TOL: f64 = 1e-6;

/// Largest eigenvalue above which a unit-trace state is treated as pure.
const PURE_THRESHOLD: f64 = 1.0 - 1e-12;

/// Unit-trace PSD version of `m`, with its top eigenpair.
struct Normalized {
    matrix: CMatrix,
    top_value: f64,
    top_vector: CVector,
}

/// Hermitizes, clamps negative eigenvalues and normalizes to unit trace.
fn normalized_psd(m: &CMatrix, what: &str) -> Result<Normalized> {
    let (values, vectors) = hermitian_eigen(m);
    let tr: f64 = values.iter().sum();
    if !(tr > 0.0 && tr.is_finite()) {
        return Err(Error::InvalidState(format!("{what} has non-positive trace {tr}")));
    }
    let min = values[0] / tr;
    if min < -FIDELITY_PSD_TOL {
        return Err(Error::NotPositive(min));
    }
    let clamped: f64 = values.iter().filter(|&&v| v < 0.0).map(|v| -v / tr).sum();
    if clamped > CLAMP_WARN_MASS {
        warn!("{what}: clamped {clamped:.3e} of negative eigenvalue mass");
    }
    let kept: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let last = values.len() - 1;
    Ok(Normalized {
        matrix: spectral_map(&values, &vectors, |x| x.max(0.0) / kept),
        top_value: values[last].max(0.0) / kept,
        top_vector: vectors.column(last).into_owned(),
    })
}

/// Uhlmann fidelity `(Tr √(√a b √a))²` of two positive matrices, each
/// normalized to unit trace first. A pure argument `|ψ><ψ|` reduces it to
/// `<ψ|ρ|ψ>`, which is evaluated directly.
pub fn uhlmann_fidelity(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.shape() != b.shape() || !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.nrows(),
        });
    }
    let a = normalized_psd(a, "first argument")?;
    let b = normalized_psd(b, "second argument")?;
    for (pure, other) in [(&a, &b), (&b, &a)] {
        if pure.top_value >= PURE_THRESHOLD {
            let v = &pure.top_vector;
            return Ok((v.adjoint() * &other.matrix * v)[(0, 0)].re.clamp(0.0, 1.0));
        }
    }
    let sa = linalg::matrix_sqrt_psd(&a.matrix)?;
    let (values, _) = hermitian_eigen(&(&sa * b.matrix * &sa));
    let root: f64 = values.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok((root * root).clamp(0.0, 1.0))
}

pub fn state_fidelity(measured: &DensityMatrix, ideal: &DensityMatrix) -> Result<FidelityReport> {
    if measured.labels() != ideal.labels() {
        return Err(if measured.dim() != ideal.dim() {
            Error::DimensionMismatch {
                expected: ideal.dim(),
                got: measured.dim(),
            }
        } else {
            Error::InvalidState("label mismatch".into())
        });
    }
    let f = uhlmann_fidelity(measured.matrix(), ideal.matrix())?;
    Ok(FidelityReport::new(FidelityKind::State, f, measured.dim()))
}
