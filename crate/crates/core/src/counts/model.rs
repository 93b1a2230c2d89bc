use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::noise::NoiseConfig;

/// Projection probability of an accidental coincidence onto one two-qubit
/// product setting.
pub const ACCIDENTAL_PROJECTION: f64 = 0.25;

/// Mean accidental coincidences in one setting window.
pub fn expected_accidentals(cfg: &NoiseConfig, duration_s: f64) -> f64 {
    cfg.pair_rate_hz * duration_s * cfg.accidental_ratio * ACCIDENTAL_PROJECTION
}

/// `rate·T·p + rate·T·ratio·1/4`.
pub fn expected_counts(p: f64, cfg: &NoiseConfig, duration_s: f64) -> f64 {
    cfg.pair_rate_hz * duration_s * p + expected_accidentals(cfg, duration_s)
}

/// Poisson draw with mean `expected`, deterministic per seed.
pub fn sample_counts(expected: f64, seed: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(expected, &mut rng)
}

pub fn sample_with(expected: f64, rng: &mut impl rand::Rng) -> u64 {
    if !(expected > 0.0) {
        return 0;
    }
    let draw: f64 = Poisson::new(expected)
        .expect("positive finite mean")
        .sample(rng);
    draw as u64
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-item seed: `splitmix64(master ^ splitmix64(index))`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(rate: f64, ratio: f64) -> NoiseConfig {
        NoiseConfig {
            pair_rate_hz: rate,
            accidental_ratio: ratio,
            ..NoiseConfig::ideal()
        }
    }

    #[test]
    fn expected_count_arithmetic() {
        assert!((expected_counts(0.5, &cfg(100.0, 0.0), 10.0) - 500.0).abs() < 1e-12);
        assert!((expected_counts(0.0, &cfg(100.0, 0.01), 10.0) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn zero_mean_draws_zero() {
        for seed in 0..10 {
            assert_eq!(sample_counts(0.0, seed), 0);
        }
    }

    #[test]
    fn draws_are_deterministic() {
        assert_eq!(sample_counts(123.4, 9), sample_counts(123.4, 9));
    }

    #[test]
    fn poisson_moments() {
        let n = 100_000;
        let draws: Vec<f64> = (0..n)
            .map(|i| sample_counts(500.0, derive_seed(77, i)) as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        // 3σ of the mean is 3·√(500/1e5) ≈ 0.21
        assert!((mean - 500.0).abs() < 1.0, "mean {mean}");
        assert!((var / mean - 1.0).abs() < 0.05, "dispersion {}", var / mean);
    }

    #[test]
    fn seed_splitting_spreads_indices() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| derive_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }
}
