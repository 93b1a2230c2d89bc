use rayon::prelude::*;

use super::model::{derive_seed, expected_accidentals, expected_counts, sample_counts};
use super::record::{CountRecord, Observation};
use super::setting::MeasurementSetting;
use crate::noise::NoiseConfig;
use crate::protocol::{BranchState, ProtocolRun};
use crate::quantum::{DensityMatrix, Register};
use crate::Result;

/// Expectation values (`Exact`) or Poisson draws (`Sampled`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcquisitionMode {
    Exact,
    Sampled { seed: u64 },
}

/// How Pauli corrections enter the measured statistics: applied to the
/// branch state, or absorbed into the analyzer by conjugating the projector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CorrectionMode {
    #[default]
    Apply,
    Relabel,
}

/// `Tr(Π ρ)` for a state on the analyzed qubits (extra qubits are traced).
pub fn state_probability(rho: &DensityMatrix, setting: &MeasurementSetting) -> Result<f64> {
    let p = setting.projector_on(rho.labels())?;
    Ok(rho.expectation(&p).clamp(0.0, 1.0))
}

/// Probability of a setting's coincidence on the post-selected run output.
pub fn run_probability(
    run: &ProtocolRun,
    setting: &MeasurementSetting,
    mode: CorrectionMode,
) -> Result<f64> {
    let mut acc = 0.0;
    let mut total = 0.0;
    for b in &run.branches {
        let (BranchState::Defined(fixed), BranchState::Defined(raw)) = (&b.corrected, &b.uncorrected)
        else {
            continue;
        };
        let p = match mode {
            CorrectionMode::Apply => state_probability(fixed, setting)?,
            CorrectionMode::Relabel => {
                // Tr(Π C ρ C†) = Tr(C† Π C ρ)
                let c = b.correction.gate().embedded(raw.labels())?;
                let proj = setting.projector_on(raw.labels())?;
                raw.expectation(&(c.adjoint() * proj * c)).clamp(0.0, 1.0)
            }
        };
        acc += b.probability * p;
        total += b.probability;
    }
    if total <= 0.0 {
        return Err(crate::Error::AbortedRun);
    }
    Ok(acc / total)
}

/// Count data for one acquisition; integer records only in sampled mode.
#[derive(Clone, Debug, PartialEq)]
pub struct Acquisition {
    pub observations: Vec<Observation>,
    pub records: Option<Vec<CountRecord>>,
}

impl Acquisition {
    pub fn extend(&mut self, other: Acquisition) {
        self.observations.extend(other.observations);
        match (&mut self.records, other.records) {
            (Some(a), Some(b)) => a.extend(b),
            (a, _) => *a = None,
        }
    }

    pub fn empty(mode: AcquisitionMode) -> Self {
        Self {
            observations: Vec::new(),
            records: match mode {
                AcquisitionMode::Exact => None,
                AcquisitionMode::Sampled { .. } => Some(Vec::new()),
            },
        }
    }
}

/// Turns setting probabilities into counts. Setting `i` draws with seed
/// `derive_seed(master, first_index + i)`; results keep the input order.
pub fn acquire(
    probabilities: &[(MeasurementSetting, f64)],
    cfg: &NoiseConfig,
    duration_s: f64,
    mode: AcquisitionMode,
    first_index: u64,
) -> Acquisition {
    let acc = expected_accidentals(cfg, duration_s);
    match mode {
        AcquisitionMode::Exact => Acquisition {
            observations: probabilities
                .iter()
                .map(|(s, p)| Observation::new(s.clone(), expected_counts(*p, cfg, duration_s), acc))
                .collect(),
            records: None,
        },
        AcquisitionMode::Sampled { seed } => {
            let records: Vec<CountRecord> = probabilities
                .par_iter()
                .enumerate()
                .map(|(i, (s, p))| {
                    let seed = derive_seed(seed, first_index + i as u64);
                    CountRecord {
                        setting: s.clone(),
                        duration_s,
                        raw_counts: sample_counts(expected_counts(*p, cfg, duration_s), seed),
                        accidental_estimate: acc,
                        seed,
                    }
                })
                .collect();
            Acquisition {
                observations: records.iter().map(Observation::from).collect(),
                records: Some(records),
            }
        }
    }
}

/// Acquires the given settings on a protocol run's output.
pub fn acquire_run(
    run: &ProtocolRun,
    settings: &[MeasurementSetting],
    cfg: &NoiseConfig,
    duration_s: f64,
    mode: AcquisitionMode,
    correction: CorrectionMode,
    first_index: u64,
) -> Result<Acquisition> {
    let probs = settings
        .iter()
        .map(|s| Ok((s.clone(), run_probability(run, &s.analysis_only(), correction)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(acquire(&probs, cfg, duration_s, mode, first_index))
}

/// Acquires the given settings directly on a state.
pub fn acquire_state(
    rho: &DensityMatrix,
    settings: &[MeasurementSetting],
    cfg: &NoiseConfig,
    duration_s: f64,
    mode: AcquisitionMode,
    first_index: u64,
) -> Result<Acquisition> {
    let probs = settings
        .iter()
        .map(|s| Ok((s.clone(), state_probability(rho, &s.analysis_only())?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(acquire(&probs, cfg, duration_s, mode, first_index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counts::setting::{computational_settings, tomographic_settings};
    use crate::protocol::{run_protocol, BranchSelection, EprResource, Protocol};
    use crate::quantum::BasisKet;

    fn noisy() -> NoiseConfig {
        NoiseConfig {
            werner_p: 0.9,
            extinction_eps: 0.02,
            visibility_v: 0.95,
            accidental_ratio: 0.1,
            pair_rate_hz: 200.0,
            gate_dephasing: 0.05,
        }
    }

    #[test]
    fn complete_family_sums_to_rate_times_duration() {
        let cfg = noisy();
        let rho = EprResource::from_noise(&cfg).unwrap().state().clone();
        // every product basis {a, a⊥} ⊗ {b, b⊥} is a complete projective family
        let bases = [
            (BasisKet::Zero, BasisKet::One),
            (BasisKet::Plus, BasisKet::Minus),
        ];
        for (a0, a1) in bases {
            for (b0, b1) in bases {
                let settings: Vec<MeasurementSetting> = [(a0, b0), (a0, b1), (a1, b0), (a1, b1)]
                    .iter()
                    .map(|&(x, y)| {
                        MeasurementSetting::new(vec![("q2".into(), x), ("q3".into(), y)]).unwrap()
                    })
                    .collect();
                let acq = acquire_state(&rho, &settings, &cfg, 10.0, AcquisitionMode::Exact, 0)
                    .unwrap();
                let total: f64 = acq.observations.iter().map(|o| o.counts).sum();
                let expected = cfg.pair_rate_hz * 10.0 * (1.0 + cfg.accidental_ratio);
                assert!((total - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn apply_and_relabel_agree() {
        let cfg = noisy();
        let epr = EprResource::from_noise(&cfg).unwrap();
        for token in ["00", "+0", "i1", "-+"] {
            let run = Protocol::from_noise(&cfg)
                .run(&token.parse().unwrap(), &epr, BranchSelection::All)
                .unwrap();
            for s in tomographic_settings() {
                let a = run_probability(&run, &s, CorrectionMode::Apply).unwrap();
                let r = run_probability(&run, &s, CorrectionMode::Relabel).unwrap();
                assert!((a - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sampled_acquisition_is_seeded_per_setting() {
        let run = run_protocol(&"10".parse().unwrap(), &EprResource::ideal(), BranchSelection::All)
            .unwrap();
        let cfg = noisy();
        let mode = AcquisitionMode::Sampled { seed: 42 };
        let a = acquire_run(&run, &computational_settings(), &cfg, 10.0, mode, CorrectionMode::Apply, 0)
            .unwrap();
        let b = acquire_run(&run, &computational_settings(), &cfg, 10.0, mode, CorrectionMode::Apply, 0)
            .unwrap();
        assert_eq!(a, b);
        let recs = a.records.unwrap();
        assert_eq!(recs[1].seed, derive_seed(42, 1));
        // |10> -> |11>: the last setting collects the pairs
        assert!(recs[3].raw_counts > 1500);
        assert!(recs[0].raw_counts < 150);
    }
}
