use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::acquire::AcquisitionMode;
use super::model::{derive_seed, sample_counts};
use super::scan::{check_axis, poisson_weights, ratio_with_error, weighted_lstsq, ScanKind, ScanResult};
use crate::noise::NoiseConfig;
use crate::{Error, Result};

/// Minimum number of delay points for a dip fit.
pub const HOM_MIN_POINTS: usize = 5;

/// Mean HOM coincidences at delay `tau`:
/// `C0·[1 − v·exp(−(τ/τc)²)] + a·C0` with `C0 = rate·T`.
pub fn hom_expected(tau_ps: f64, coherence_ps: f64, cfg: &NoiseConfig, duration_s: f64) -> f64 {
    let c0 = cfg.pair_rate_hz * duration_s;
    let dip = (-(tau_ps / coherence_ps).powi(2)).exp();
    c0 * (1.0 - cfg.visibility_v * dip) + hom_accidentals(cfg, duration_s)
}

pub fn hom_accidentals(cfg: &NoiseConfig, duration_s: f64) -> f64 {
    cfg.accidental_ratio * cfg.pair_rate_hz * duration_s
}

/// Simulates a delay scan and fits the dip.
pub fn hom_scan(
    delays_ps: &[f64],
    coherence_ps: f64,
    cfg: &NoiseConfig,
    duration_s: f64,
    mode: AcquisitionMode,
) -> Result<ScanResult> {
    check_axis(delays_ps)?;
    if !(coherence_ps > 0.0 && coherence_ps.is_finite()) {
        return Err(Error::OutOfRange {
            name: "coherence_ps",
            value: coherence_ps,
            range: "(0, inf)",
        });
    }
    cfg.validate()?;
    let counts: Vec<f64> = delays_ps
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mean = hom_expected(t, coherence_ps, cfg, duration_s);
            match mode {
                AcquisitionMode::Exact => mean,
                AcquisitionMode::Sampled { seed } => {
                    sample_counts(mean, derive_seed(seed, i as u64)) as f64
                }
            }
        })
        .collect();
    fit_hom(delays_ps, &counts, hom_accidentals(cfg, duration_s))
}

/// Fits `B − A·exp(−(τ/τc)²)` by variable projection: `(B, A)` are solved
/// linearly for each `τc`, and `τc` is found by a log-grid search followed
/// by golden-section refinement.
pub fn fit_hom(delays_ps: &[f64], counts: &[f64], accidental_estimate: f64) -> Result<ScanResult> {
    check_axis(delays_ps)?;
    if counts.len() != delays_ps.len() {
        return Err(Error::DimensionMismatch {
            expected: delays_ps.len(),
            got: counts.len(),
        });
    }
    if delays_ps.len() < HOM_MIN_POINTS {
        return Err(Error::Underdetermined(format!(
            "HOM fit needs at least {HOM_MIN_POINTS} points, got {}",
            delays_ps.len()
        )));
    }
    if counts.iter().all(|&c| c <= 0.0) {
        return Err(Error::NoCounts);
    }
    let w = poisson_weights(counts);
    let design = |tc: f64| {
        DMatrix::from_fn(delays_ps.len(), 2, |i, j| {
            if j == 0 {
                1.0
            } else {
                -(-(delays_ps[i] / tc).powi(2)).exp()
            }
        })
    };
    let chi2 = |log_tc: f64| {
        weighted_lstsq(&design(log_tc.exp()), counts, &w).map_or(f64::INFINITY, |f| f.chi2)
    };

    let span = delays_ps[delays_ps.len() - 1] - delays_ps[0];
    let step = delays_ps
        .windows(2)
        .map(|p| p[1] - p[0])
        .fold(f64::INFINITY, f64::min);
    let (lo, hi) = ((step / 4.0).ln(), (4.0 * span).ln());
    let grid = 400;
    let at = |k: usize| lo + (hi - lo) * k as f64 / grid as f64;
    let best = (0..=grid)
        .map(|k| (k, chi2(at(k))))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
        .0;
    let (mut a, mut b) = (at(best.saturating_sub(1)), at((best + 1).min(grid)));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if chi2(c) <= chi2(d) {
            b = d;
        } else {
            a = c;
        }
        if b - a < 1e-12 {
            break;
        }
    }
    let tc = (0.5 * (a + b)).exp();
    let x = design(tc);
    let fit = weighted_lstsq(&x, counts, &w)?;
    let (base, amp) = (fit.coef[0], fit.coef[1]);
    let (vb, va, cab) = (fit.cov[(0, 0)], fit.cov[(1, 1)], fit.cov[(0, 1)]);
    let (raw, raw_err) = ratio_with_error(amp, base, 0.0, va, vb, cab)?;
    let (vis, vis_err) = ratio_with_error(amp, base, accidental_estimate, va, vb, cab)?;
    let curve = (0..delays_ps.len())
        .map(|i| (x.row(i) * &fit.coef)[0])
        .collect();
    let dof = (delays_ps.len() - 3) as f64;
    let parameters = BTreeMap::from([
        ("baseline".to_string(), base),
        ("dip_depth".to_string(), amp),
        ("coherence_ps".to_string(), tc),
    ]);
    Ok(ScanResult {
        kind: ScanKind::Hom,
        x_label: "delay_ps".into(),
        x: delays_ps.to_vec(),
        counts: counts.to_vec(),
        fit: curve,
        accidental_estimate,
        raw_visibility: raw,
        raw_visibility_error: raw_err,
        visibility: vis,
        visibility_error: vis_err,
        reduced_chi2: fit.chi2 / dof,
        parameters,
    })
}

/// `n` delays evenly spaced over `[-3τc, 3τc]`.
pub fn default_delays(coherence_ps: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n)
        .map(|i| -3.0 * coherence_ps + 6.0 * coherence_ps * i as f64 / (n - 1) as f64)
        .collect()
}
