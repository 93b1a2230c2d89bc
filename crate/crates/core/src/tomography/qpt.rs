use std::collections::BTreeMap;

use rayon::prelude::*;

use super::process::{apply_choi, choi_output_trace, ChiMatrix};
use super::qst::{log_likelihood, qst_reconstruct_with, trace_product, MleOptions};
use crate::counts::{tomographic_inputs, Observation};
use crate::quantum::linalg::{self, hermitian_eigen, CMatrix};
use crate::quantum::{BasisKet, DensityMatrix};
use crate::{Error, Result};

pub const PROJECTION_ROUNDS: usize = 500;
pub const PROJECTION_TOL: f64 = 1e-9;
/// Largest step the adaptive refinement may grow to.
pub const MAX_STEP: f64 = 1e3;

#[derive(Clone, Debug, PartialEq)]
pub struct QptResult {
    pub chi: ChiMatrix,
    /// Choi matrix `Σ |i><j| ⊗ E(|i><j|)`, input factor first.
    pub choi: CMatrix,
    /// Per-input QST estimates, keyed by preparation.
    pub outputs: Vec<((BasisKet, BasisKet), DensityMatrix)>,
    pub projection_rounds: usize,
    /// Joint log-likelihood after each accepted refinement step, start first.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Observations grouped by input preparation, with the common analyzer labels.
struct Grouped {
    labels: Vec<String>,
    groups: BTreeMap<(BasisKet, BasisKet), Vec<Observation>>,
}

fn group(obs: &[Observation]) -> Result<Grouped> {
    let first = obs.first().ok_or(Error::NoCounts)?;
    let labels = first.setting.labels();
    if labels.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: labels.len(),
        });
    }
    let mut groups: BTreeMap<_, Vec<Observation>> = BTreeMap::new();
    for o in obs {
        let input = o
            .setting
            .input()
            .ok_or_else(|| Error::InvalidState(format!("setting {} has no input tag", o.setting)))?;
        if o.setting.labels() != labels {
            return Err(Error::InvalidState(format!(
                "setting {} analyzes different qubits",
                o.setting
            )));
        }
        groups.entry(input).or_default().push(o.clone());
    }
    let missing: Vec<String> = tomographic_inputs()
        .into_iter()
        .filter(|k| !groups.contains_key(k))
        .map(|(a, b)| format!("{a}{b}"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingInputs(missing.join(", ")));
    }
    Ok(Grouped { labels, groups })
}

fn input_state((a, b): (BasisKet, BasisKet)) -> CMatrix {
    a.projector().kronecker(&b.projector())
}

/// Solves `E(ρ_k) = out_k` for the Choi matrix by least squares over the
/// input operators.
fn linear_choi(inputs: &[CMatrix], outputs: &[CMatrix]) -> Result<CMatrix> {
    let d = inputs[0].nrows();
    let b = CMatrix::from_fn(inputs.len(), d * d, |k, ab| inputs[k][(ab / d, ab % d)]);
    let svd = b.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if inputs.len() < d * d || !(smin > super::qst::SINGULAR_RATIO * smax) {
        return Err(Error::SingularDesign(smin));
    }
    let pinv = svd
        .pseudo_inverse(0.0)
        .map_err(|_| Error::SingularDesign(smin))?;
    let mut j = CMatrix::zeros(d * d, d * d);
    for ab in 0..d * d {
        let (a, bb) = (ab / d, ab % d);
        let mut block = CMatrix::zeros(d, d);
        for (k, out) in outputs.iter().enumerate() {
            block += out * pinv[(ab, k)];
        }
        j.view_mut((a * d, bb * d), (d, d)).copy_from(&block);
    }
    Ok(linalg::hermitian_part(&j))
}

/// `X ⊗ I` on the input factor.
fn input_factor(x: &CMatrix, d: usize) -> CMatrix {
    x.kronecker(&CMatrix::identity(d, d))
}

/// Closest trace-preserving matrix in Frobenius norm.
fn tp_projection(j: &CMatrix, d: usize) -> CMatrix {
    let excess = choi_output_trace(j, d) - CMatrix::identity(d, d);
    j - input_factor(&excess, d).unscale(d as f64)
}

/// Congruence by `λ^{-1/2} ⊗ I` with `λ = Tr_out J`: exact trace preservation
/// while keeping positivity.
fn tp_rescale(j: &CMatrix, d: usize) -> Result<CMatrix> {
    let lambda = linalg::hermitian_part(&choi_output_trace(j, d));
    let (values, _) = hermitian_eigen(&lambda);
    let j = if values[0] <= 1e-12 {
        // blend in the fully depolarizing map so every input keeps weight
        j.scale(0.999) + CMatrix::identity(d * d, d * d).scale(0.001 / d as f64)
    } else {
        j.clone()
    };
    let s = input_factor(&linalg::inverse_sqrt_pd(&choi_output_trace(&j, d))?, d);
    Ok(linalg::hermitian_part(&(&s * j * &s)))
}

/// Alternating PSD / trace-preserving projections, then an exact rescale.
fn cptp_projection(j: &CMatrix, d: usize) -> Result<(CMatrix, usize)> {
    let mut cur = j.clone();
    let mut rounds = 0;
    while rounds < PROJECTION_ROUNDS {
        rounds += 1;
        let (psd, _) = linalg::psd_projection(&cur);
        let next = tp_projection(&psd, d);
        let change = linalg::frobenius(&(&next - &cur));
        cur = next;
        if change < PROJECTION_TOL {
            break;
        }
    }
    let (psd, _) = linalg::psd_projection(&cur);
    Ok((tp_rescale(&psd, d)?, rounds))
}

/// Joint count data: per input, the input operator and its settings.
struct JointData {
    inputs: Vec<CMatrix>,
    projectors: Vec<Vec<CMatrix>>,
    freqs: Vec<Vec<f64>>,
    /// `W = Σ_k ρ_kᵀ ⊗ G_k`.
    w: CMatrix,
    w_max: f64,
}

impl JointData {
    fn new(grouped: &Grouped, opts: &MleOptions) -> Result<Self> {
        let mut inputs = Vec::new();
        let mut projectors = Vec::new();
        let mut counts = Vec::new();
        for (k, obs) in &grouped.groups {
            inputs.push(input_state(*k));
            let mut ps = Vec::with_capacity(obs.len());
            let mut ns = Vec::with_capacity(obs.len());
            for o in obs {
                ps.push(o.setting.projector_on(&grouped.labels)?);
                ns.push(if opts.subtract_accidentals { o.subtracted() } else { o.counts });
            }
            projectors.push(ps);
            counts.push(ns);
        }
        let total: f64 = counts.iter().flatten().sum();
        if !(total > 0.0) {
            return Err(Error::NoCounts);
        }
        let freqs = counts
            .iter()
            .map(|ns| ns.iter().map(|n| n / total).collect())
            .collect();
        let d = inputs[0].nrows();
        let mut w = CMatrix::zeros(d * d, d * d);
        for (rho, ps) in inputs.iter().zip(&projectors) {
            let g: CMatrix = ps.iter().sum();
            w += rho.transpose().kronecker(&g);
        }
        let w_max = *hermitian_eigen(&w).0.last().unwrap();
        Ok(Self {
            inputs,
            projectors,
            freqs,
            w,
            w_max,
        })
    }

    fn probabilities(&self, j: &CMatrix) -> Vec<Vec<f64>> {
        self.inputs
            .iter()
            .zip(&self.projectors)
            .map(|(rho, ps)| {
                let out = apply_choi(j, rho);
                ps.iter().map(|p| trace_product(p, &out)).collect()
            })
            .collect()
    }

    /// `Σ f ln(p / Σp)`.
    fn log_likelihood(&self, probs: &[Vec<f64>]) -> f64 {
        let total: f64 = probs.iter().flatten().sum();
        let f: Vec<f64> = self.freqs.iter().flatten().copied().collect();
        let p: Vec<f64> = probs.iter().flatten().map(|p| p / total).collect();
        log_likelihood(&f, &p)
    }

    /// `Σp · Σ_k ρ_kᵀ ⊗ (Σ_s f/p Π_s) − W`, scaled by `1/λmax(W)`.
    fn direction(&self, probs: &[Vec<f64>]) -> CMatrix {
        let total: f64 = probs.iter().flatten().sum();
        let d = self.inputs[0].nrows();
        let mut k = CMatrix::zeros(d * d, d * d);
        for ((rho, ps), (fs, pr)) in self
            .inputs
            .iter()
            .zip(&self.projectors)
            .zip(self.freqs.iter().zip(probs))
        {
            let mut acc = CMatrix::zeros(d, d);
            for ((p, f), q) in ps.iter().zip(fs).zip(pr) {
                if *f > 0.0 {
                    acc += p.scale(f / q);
                }
            }
            k += rho.transpose().kronecker(&acc);
        }
        (k.scale(total) - &self.w).unscale(self.w_max)
    }
}

/// Maximum-likelihood process reconstruction with default options.
pub fn qpt_reconstruct(obs: &[Observation]) -> Result<QptResult> {
    qpt_reconstruct_with(obs, &MleOptions::default())
}

/// Per-input QST, linear inversion to the Choi matrix, CPTP projection, then
/// a diluted likelihood ascent `J ← (λ^{-1/2}⊗I) K J K (λ^{-1/2}⊗I)` over all
/// 256 settings jointly, with the same stopping rule as QST.
pub fn qpt_reconstruct_with(obs: &[Observation], opts: &MleOptions) -> Result<QptResult> {
    let grouped = group(obs)?;
    let keys: Vec<(BasisKet, BasisKet)> = grouped.groups.keys().copied().collect();
    let states: Vec<DensityMatrix> = keys
        .par_iter()
        .map(|k| Ok(qst_reconstruct_with(&grouped.groups[k], opts)?.state))
        .collect::<Result<_>>()?;
    let inputs: Vec<CMatrix> = keys.iter().map(|k| input_state(*k)).collect();
    let outs: Vec<CMatrix> = states.iter().map(|s| s.matrix().clone()).collect();
    let d = inputs[0].nrows();
    let (mut j, rounds) = cptp_projection(&linear_choi(&inputs, &outs)?, d)?;

    let data = JointData::new(&grouped, opts)?;
    let mut probs = data.probabilities(&j);
    let mut ll = data.log_likelihood(&probs);
    let mut trace = vec![ll];
    let mut iterations = 0;
    let mut converged = false;
    let identity = CMatrix::identity(d * d, d * d);
    // the step grows after each accepted move and halves on rejection
    let mut eps = opts.dilution;
    while iterations < opts.max_iterations {
        let dir = data.direction(&probs);
        let step = loop {
            let k = &identity + dir.scale(eps);
            let cand = tp_rescale(&(&k * &j * &k), d)?;
            let cand_probs = data.probabilities(&cand);
            let cand_ll = data.log_likelihood(&cand_probs);
            if cand_ll >= ll {
                break Some((cand, cand_probs, cand_ll));
            }
            eps *= 0.5;
            if eps < 1e-12 {
                break None;
            }
        };
        let Some((cand, cand_probs, cand_ll)) = step else {
            converged = true;
            break;
        };
        iterations += 1;
        let gain = cand_ll - ll;
        eps = (eps * 2.0).min(MAX_STEP);
        j = cand;
        probs = cand_probs;
        ll = cand_ll;
        trace.push(ll);
        if gain < opts.tolerance {
            converged = true;
            break;
        }
    }

    let chi = ChiMatrix::from_choi(&j, grouped.labels.clone())?;
    Ok(QptResult {
        chi,
        choi: j,
        outputs: keys.into_iter().zip(states).collect(),
        projection_rounds: rounds,
        log_likelihood: trace,
        iterations,
        converged,
    })
}
