use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counts::{derive_seed, sample_counts, Observation};
use crate::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub mean: f64,
    /// Sample standard deviation over resamples.
    pub sigma: f64,
    pub samples: Vec<f64>,
}

/// Poisson redraw of every count around its observed value. Observation `i`
/// uses seed `derive_seed(seed, i)`.
pub fn resample(obs: &[Observation], seed: u64) -> Vec<Observation> {
    obs.iter()
        .enumerate()
        .map(|(i, o)| {
            let n = sample_counts(o.counts, derive_seed(seed, i as u64));
            Observation::new(o.setting.clone(), n as f64, o.accidental_estimate)
        })
        .collect()
}

/// Parametric bootstrap of a scalar statistic. Resample `b` draws from
/// `derive_seed(seed, b)`; resamples run in parallel and the result does not
/// depend on thread count.
pub fn bootstrap<F>(obs: &[Observation], resamples: usize, seed: u64, statistic: F) -> Result<BootstrapSummary>
where
    F: Fn(&[Observation]) -> Result<f64> + Sync,
{
    if resamples < 2 {
        return Err(Error::OutOfRange {
            name: "resamples",
            value: resamples as f64,
            range: "[2, inf)",
        });
    }
    let samples: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|b| statistic(&resample(obs, derive_seed(seed, b as u64))))
        .collect::<Result<_>>()?;
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(BootstrapSummary {
        mean,
        sigma: var.sqrt(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::tomographic_settings;

    fn flat(n: f64) -> Vec<Observation> {
        tomographic_settings()
            .into_iter()
            .map(|s| Observation::new(s, n, 0.0))
            .collect()
    }

    #[test]
    fn sigma_of_a_mean_count() {
        // mean of 16 Poisson(400) draws: σ = √400 / 4 = 5
        let obs = flat(400.0);
        let s = bootstrap(&obs, 400, 1, |o| {
            Ok(o.iter().map(|x| x.counts).sum::<f64>() / o.len() as f64)
        })
        .unwrap();
        assert!((s.mean - 400.0).abs() < 1.5);
        assert!((s.sigma - 5.0).abs() < 0.75, "{}", s.sigma);
    }

    #[test]
    fn deterministic_per_seed() {
        let obs = flat(50.0);
        let stat = |o: &[Observation]| Ok(o[3].counts);
        assert_eq!(
            bootstrap(&obs, 20, 9, stat).unwrap(),
            bootstrap(&obs, 20, 9, stat).unwrap()
        );
        assert_ne!(resample(&obs, 1), resample(&obs, 2));
    }

    #[test]
    fn rejects_single_resample() {
        assert!(bootstrap(&flat(1.0), 1, 0, |_| Ok(0.0)).is_err());
    }
}
