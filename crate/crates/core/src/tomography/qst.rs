use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::counts::Observation;
use crate::quantum::linalg::{self, hermitian_eigen, spectral_map, CMatrix};
use crate::quantum::{pauli_basis, DensityMatrix};
use crate::{Error, Result};

/// Relative singular-value floor below which a design counts as singular.
pub const SINGULAR_RATIO: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Step size `ε` in `σ ← (I + εR) σ (I + εR) / tr`.
    pub dilution: f64,
    /// Stop once one step gains less log-likelihood than this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Use accidental-subtracted counts instead of raw counts.
    pub subtract_accidentals: bool,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            dilution: 0.5,
            tolerance: 1e-10,
            max_iterations: 10_000,
            subtract_accidentals: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QstResult {
    pub state: DensityMatrix,
    /// Linear-inversion estimate after PSD clamping.
    pub seed: DensityMatrix,
    /// Log-likelihood `Σ f_s ln p_s` after each accepted step, seed first.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Count frequencies and projectors shared by the linear and MLE stages.
pub(crate) struct QstData {
    pub labels: Vec<String>,
    pub projectors: Vec<CMatrix>,
    pub counts: Vec<f64>,
}

impl QstData {
    pub fn new(obs: &[Observation], subtract_accidentals: bool) -> Result<Self> {
        let first = obs.first().ok_or(Error::NoCounts)?;
        let labels = first.setting.labels();
        let mut projectors = Vec::with_capacity(obs.len());
        let mut counts = Vec::with_capacity(obs.len());
        for o in obs {
            if o.setting.labels().len() != labels.len() {
                return Err(Error::InvalidState(format!(
                    "setting {} does not cover {}",
                    o.setting,
                    labels.join(",")
                )));
            }
            projectors.push(o.setting.projector_on(&labels)?);
            let n = if subtract_accidentals { o.subtracted() } else { o.counts };
            if !(n >= 0.0 && n.is_finite()) {
                return Err(Error::InvalidState(format!("counts {n} for {}", o.setting)));
            }
            counts.push(n);
        }
        if counts.iter().sum::<f64>() <= 0.0 {
            return Err(Error::NoCounts);
        }
        Ok(Self {
            labels,
            projectors,
            counts,
        })
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].nrows()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let total: f64 = self.counts.iter().sum();
        self.counts.iter().map(|n| n / total).collect()
    }
}

/// `Re Tr(a b)` without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (a[(i, j)], b[(j, i)]);
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Least-squares Pauli expansion of the counts, with unknown overall rate.
/// Returns the Hermitian (possibly non-positive) unit-trace estimate.
pub(crate) fn linear_inversion(data: &QstData) -> Result<CMatrix> {
    let d = data.dim();
    let basis = pauli_basis(linalg::qubit_count(d)?);
    let design = DMatrix::from_fn(data.projectors.len(), basis.len(), |s, m| {
        trace_product(&data.projectors[s], &basis[m].1) / d as f64
    });
    if design.nrows() < design.ncols() {
        return Err(Error::SingularDesign(0.0));
    }
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > SINGULAR_RATIO * smax) {
        return Err(Error::SingularDesign(smin));
    }
    let y = nalgebra::DVector::from_column_slice(&data.counts);
    let x = svd
        .solve(&y, 0.0)
        .map_err(|_| Error::SingularDesign(smin))?;
    let mut rho = CMatrix::zeros(d, d);
    for (m, (_, p)) in basis.iter().enumerate() {
        rho += p.scale(x[m] / d as f64);
    }
    let tr = linalg::trace(&rho).re;
    if !(tr > 0.0) {
        return Ok(CMatrix::identity(d, d).unscale(d as f64));
    }
    Ok(linalg::hermitian_part(&rho.unscale(tr)))
}

/// PSD-clamped, trace-normalized copy.
pub(crate) fn clamp_to_state(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let kept: f64 = values.iter().map(|v| v.max(0.0)).sum();
    if kept <= 0.0 {
        let d = m.nrows();
        return CMatrix::identity(d, d).unscale(d as f64);
    }
    spectral_map(&values, &vectors, |x| x.max(0.0) / kept)
}

/// Log-likelihood `Σ f ln p` (terms with `f = 0` dropped).
pub(crate) fn log_likelihood(f: &[f64], p: &[f64]) -> f64 {
    f.iter()
        .zip(p)
        .filter(|(f, _)| **f > 0.0)
        .map(|(f, p)| if *p > 0.0 { f * p.ln() } else { f64::NEG_INFINITY })
        .sum()
}

/// Blends in the maximally mixed state when an observed setting has no
/// support, so the likelihood is finite at the start.
pub(crate) fn ensure_support(rho: CMatrix, f: &[f64], projectors: &[CMatrix]) -> CMatrix {
    let starved = f
        .iter()
        .zip(projectors)
        .any(|(f, p)| *f > 1e-9 && trace_product(p, &rho) <= 1e-12);
    if !starved {
        return rho;
    }
    let d = rho.nrows();
    rho.scale(0.9) + CMatrix::identity(d, d).scale(0.1 / d as f64)
}

/// Maximum-likelihood state reconstruction with default options.
pub fn qst_reconstruct(obs: &[Observation]) -> Result<QstResult> {
    qst_reconstruct_with(obs, &MleOptions::default())
}

/// Linear-inversion seed, then the diluted `RρR` fixed point.
///
/// The settings need not form a POVM: with `G = Σ Π_s` the iteration runs on
/// `σ ∝ G^{1/2} ρ G^{1/2}` against the normalized effects `G^{-1/2} Π_s G^{-1/2}`,
/// which maximizes the likelihood with the overall rate profiled out.
/// A step that would lower the likelihood is retried at half the dilution.
pub fn qst_reconstruct_with(obs: &[Observation], opts: &MleOptions) -> Result<QstResult> {
    let data = QstData::new(obs, opts.subtract_accidentals)?;
    let seed = clamp_to_state(&linear_inversion(&data)?);
    let f = data.frequencies();
    let d = data.dim();

    let g: CMatrix = data.projectors.iter().sum();
    let g_half = linalg::matrix_sqrt_psd(&g)?;
    let g_inv_half = linalg::inverse_sqrt_pd(&g)?;
    let effects: Vec<CMatrix> = data
        .projectors
        .iter()
        .map(|p| &g_inv_half * p * &g_inv_half)
        .collect();

    let start = ensure_support(seed.clone(), &f, &data.projectors);
    let mut sigma = normalize(&(&g_half * start * &g_half));
    let probs = |s: &CMatrix| effects.iter().map(|e| trace_product(e, s)).collect::<Vec<_>>();
    let mut ll = log_likelihood(&f, &probs(&sigma));
    let mut trace = vec![ll];
    let mut converged = false;
    let mut iterations = 0;
    let identity = CMatrix::identity(d, d);

    while iterations < opts.max_iterations {
        let p = probs(&sigma);
        let mut r = CMatrix::zeros(d, d);
        for ((fs, ps), e) in f.iter().zip(&p).zip(&effects) {
            if *fs > 0.0 {
                r += e.scale(fs / ps);
            }
        }
        let mut eps = opts.dilution;
        let accepted = loop {
            let k = &identity + r.scale(eps);
            let cand = normalize(&(&k * &sigma * &k));
            let cand_ll = log_likelihood(&f, &probs(&cand));
            if cand_ll >= ll {
                break Some((cand, cand_ll));
            }
            eps *= 0.5;
            if eps < 1e-12 {
                break None;
            }
        };
        let Some((cand, cand_ll)) = accepted else {
            converged = true;
            break;
        };
        iterations += 1;
        let gain = cand_ll - ll;
        sigma = cand;
        ll = cand_ll;
        trace.push(ll);
        if gain < opts.tolerance {
            converged = true;
            break;
        }
    }

    let rho = clamp_to_state(&(&g_inv_half * &sigma * &g_inv_half));
    Ok(QstResult {
        state: DensityMatrix::from_approximate(&rho, data.labels.clone())?,
        seed: DensityMatrix::from_approximate(&seed, data.labels)?,
        log_likelihood: trace,
        iterations,
        converged,
    })
}

fn normalize(m: &CMatrix) -> CMatrix {
    let h = linalg::hermitian_part(m);
    let tr = linalg::trace(&h).re;
    h.unscale(tr)
}

/// Profiled log-likelihood of a candidate state against observations,
/// `Σ f_s ln(Tr(Π_s ρ) / Tr(G ρ))`.
pub fn profiled_log_likelihood(obs: &[Observation], rho: &DensityMatrix, opts: &MleOptions) -> Result<f64> {
    let data = QstData::new(obs, opts.subtract_accidentals)?;
    let g: CMatrix = data.projectors.iter().sum();
    let norm = trace_product(&g, rho.matrix());
    let p: Vec<f64> = data
        .projectors
        .iter()
        .map(|pr| trace_product(pr, rho.matrix()) / norm)
        .collect();
    Ok(log_likelihood(&data.frequencies(), &p))
}
