use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::acquire::AcquisitionMode;
use super::model::{derive_seed, expected_accidentals, expected_counts, sample_counts};
use super::scan::{check_axis, poisson_weights, ratio_with_error, weighted_lstsq, ScanKind, ScanResult};
use crate::noise::NoiseConfig;
use crate::quantum::linalg::{c, CMatrix, ONE};
use crate::quantum::{DensityMatrix, Register};
use crate::{Error, Result};

/// Projector onto `(|0> + s·e^{iφ}|1>)/√2` with `s = ±1`.
pub fn equatorial_projector(phase: f64, sign: f64) -> CMatrix {
    let e = c(phase.cos(), phase.sin()) * sign;
    CMatrix::from_row_slice(2, 2, &[ONE, e.conj(), e, ONE * 1.0]).scale(0.5)
}

/// Equatorial analyzer phases for the two parties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshAngles {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl ChshAngles {
    /// Maximal violation for `|Φ+>`, whose correlator is `cos(φa + φb)`.
    pub const OPTIMAL: ChshAngles = ChshAngles {
        a: 0.0,
        a_prime: FRAC_PI_2,
        b: -FRAC_PI_4,
        b_prime: -3.0 * FRAC_PI_4,
    };

    /// `(φa, φb)` for the correlators in `S = E(a,b) − E(a,b') + E(a',b) + E(a',b')`.
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [
            (self.a, self.b),
            (self.a, self.b_prime),
            (self.a_prime, self.b),
            (self.a_prime, self.b_prime),
        ]
    }
}

impl Default for ChshAngles {
    fn default() -> Self {
        Self::OPTIMAL
    }
}

const SIGNS: [f64; 4] = [1.0, -1.0, 1.0, 1.0];
const OUTCOMES: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub s: f64,
    pub s_error: f64,
    pub correlators: [f64; 4],
    pub correlator_errors: [f64; 4],
    /// Raw coincidences per analyzer pair, outcomes `++, +-, -+, --`.
    pub counts: [[f64; 4]; 4],
    pub accidental_estimate: f64,
    pub accidentals_subtracted: bool,
}

fn check_two_qubits(rho: &DensityMatrix) -> Result<()> {
    if rho.num_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho.dim(),
        });
    }
    Ok(())
}

fn joint_probability(rho: &DensityMatrix, pa: &CMatrix, pb: &CMatrix) -> f64 {
    rho.expectation(&pa.kronecker(pb)).clamp(0.0, 1.0)
}

/// Counts all four outcome combinations for each analyzer pair and forms
/// `S`. Poisson errors on the raw counts propagate to each correlator.
pub fn chsh_measurement(
    rho: &DensityMatrix,
    angles: &ChshAngles,
    cfg: &NoiseConfig,
    duration_s: f64,
    mode: AcquisitionMode,
    subtract_accidentals: bool,
) -> Result<ChshResult> {
    check_two_qubits(rho)?;
    cfg.validate()?;
    let acc = expected_accidentals(cfg, duration_s);
    let mut counts = [[0.0; 4]; 4];
    for (k, &(fa, fb)) in angles.pairs().iter().enumerate() {
        for (o, &(sa, sb)) in OUTCOMES.iter().enumerate() {
            let p = joint_probability(rho, &equatorial_projector(fa, sa), &equatorial_projector(fb, sb));
            let mean = expected_counts(p, cfg, duration_s);
            counts[k][o] = match mode {
                AcquisitionMode::Exact => mean,
                AcquisitionMode::Sampled { seed } => {
                    sample_counts(mean, derive_seed(seed, (4 * k + o) as u64)) as f64
                }
            };
        }
    }
    let sub = if subtract_accidentals { acc } else { 0.0 };
    let mut correlators = [0.0; 4];
    let mut errors = [0.0; 4];
    for k in 0..4 {
        let m: Vec<f64> = counts[k].iter().map(|n| (n - sub).max(0.0)).collect();
        let total: f64 = m.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateCounts(format!("no coincidences for analyzer pair {k}")));
        }
        let e = OUTCOMES
            .iter()
            .zip(&m)
            .map(|(&(sa, sb), n)| sa * sb * n)
            .sum::<f64>()
            / total;
        let var = OUTCOMES
            .iter()
            .zip(&counts[k])
            .map(|(&(sa, sb), &n)| (sa * sb - e).powi(2) * n)
            .sum::<f64>()
            / (total * total);
        correlators[k] = e;
        errors[k] = var.sqrt();
    }
    let s = SIGNS.iter().zip(&correlators).map(|(s, e)| s * e).sum();
    let s_error = errors.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(ChshResult {
        s,
        s_error,
        correlators,
        correlator_errors: errors,
        counts,
        accidental_estimate: acc,
        accidentals_subtracted: subtract_accidentals,
    })
}

/// `S` straight from the state, without counting.
pub fn chsh_value(rho: &DensityMatrix, angles: &ChshAngles) -> Result<f64> {
    check_two_qubits(rho)?;
    let mut s = 0.0;
    for (k, &(fa, fb)) in angles.pairs().iter().enumerate() {
        let e: f64 = OUTCOMES
            .iter()
            .map(|&(sa, sb)| {
                sa * sb * joint_probability(rho, &equatorial_projector(fa, sa), &equatorial_projector(fb, sb))
            })
            .sum();
        s += SIGNS[k] * e;
    }
    Ok(s)
}

/// Coincidences with the first analyzer fixed at `alice_phase` and the second
/// swept over `phases`, fitted to `c0 + c1·cos φ + c2·sin φ`.
pub fn fringe_scan(
    rho: &DensityMatrix,
    alice_phase: f64,
    phases: &[f64],
    cfg: &NoiseConfig,
    duration_s: f64,
    mode: AcquisitionMode,
) -> Result<ScanResult> {
    check_two_qubits(rho)?;
    check_axis(phases)?;
    cfg.validate()?;
    if phases.len() < 4 {
        return Err(Error::Underdetermined(format!(
            "fringe fit needs at least 4 points, got {}",
            phases.len()
        )));
    }
    let pa = equatorial_projector(alice_phase, 1.0);
    let counts: Vec<f64> = phases
        .iter()
        .enumerate()
        .map(|(i, &phi)| {
            let mean = expected_counts(
                joint_probability(rho, &pa, &equatorial_projector(phi, 1.0)),
                cfg,
                duration_s,
            );
            match mode {
                AcquisitionMode::Exact => mean,
                AcquisitionMode::Sampled { seed } => {
                    sample_counts(mean, derive_seed(seed, i as u64)) as f64
                }
            }
        })
        .collect();
    let acc = expected_accidentals(cfg, duration_s);
    let design = DMatrix::from_fn(phases.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => phases[i].cos(),
        _ => phases[i].sin(),
    });
    let fit = weighted_lstsq(&design, &counts, &poisson_weights(&counts))?;
    let (c0, c1, c2) = (fit.coef[0], fit.coef[1], fit.coef[2]);
    let amp = c1.hypot(c2);
    // amplitude variance along the fitted direction
    let (u1, u2) = if amp > 0.0 { (c1 / amp, c2 / amp) } else { (1.0, 0.0) };
    let var_amp = u1 * u1 * fit.cov[(1, 1)] + u2 * u2 * fit.cov[(2, 2)] + 2.0 * u1 * u2 * fit.cov[(1, 2)];
    let cov_amp_base = u1 * fit.cov[(0, 1)] + u2 * fit.cov[(0, 2)];
    let (raw, raw_err) = ratio_with_error(amp, c0, 0.0, var_amp, fit.cov[(0, 0)], cov_amp_base)?;
    let (vis, vis_err) = ratio_with_error(amp, c0, acc, var_amp, fit.cov[(0, 0)], cov_amp_base)?;
    let curve = (0..phases.len())
        .map(|i| (design.row(i) * &fit.coef)[0])
        .collect();
    let dof = (phases.len() - 3).max(1) as f64;
    Ok(ScanResult {
        kind: ScanKind::Fringe,
        x_label: "phase_rad".into(),
        x: phases.to_vec(),
        counts,
        fit: curve,
        accidental_estimate: acc,
        raw_visibility: raw,
        raw_visibility_error: raw_err,
        visibility: vis,
        visibility_error: vis_err,
        reduced_chi2: fit.chi2 / dof,
        parameters: BTreeMap::from([
            ("offset".to_string(), c0),
            ("fringe_phase_rad".to_string(), c2.atan2(c1)),
            ("alice_phase_rad".to_string(), alice_phase),
        ]),
    })
}

/// `n` phases evenly spaced over `[0, 2π)`.
pub fn default_phases(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| std::f64::consts::TAU * i as f64 / n as f64)
        .collect()
}
