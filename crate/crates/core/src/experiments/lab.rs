use rayon::prelude::*;

use crate::counts::{
    acquire_run, chsh_measurement, default_delays, default_phases, derive_seed, fringe_scan,
    hom_scan, tomographic_inputs, tomographic_settings, Acquisition, AcquisitionMode, ChshAngles,
    ChshResult, CorrectionMode, MeasurementSetting, Observation, ScanResult,
};
use crate::noise::NoiseConfig;
use crate::protocol::{BranchSelection, EprResource, InputStatePrep, Protocol};
use crate::quantum::{BasisKet, DensityMatrix, Gate};
use crate::tomography::{
    average_gate_report, bootstrap, process_fidelity, qpt_reconstruct, qst_reconstruct,
    state_fidelity, truth_table_fidelity, ChiMatrix, FidelityKind, FidelityReport,
    PauliTransferMatrix, QptResult, QstResult, TruthTable,
};
use crate::{Error, Result};

// Each measurement family draws from its own seed stream.
const STREAM_TRUTH_TABLE: u64 = 1;
const STREAM_PROCESS: u64 = 2;
const STREAM_CHSH: u64 = 3;
const STREAM_FRINGE: u64 = 4;
const STREAM_HOM: u64 = 5;
const STREAM_STATE: u64 = 0x100;
const STREAM_BOOTSTRAP: u64 = 1 << 32;

/// One simulated apparatus: noise, counting window, acquisition mode and
/// error-bar settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lab {
    pub noise: NoiseConfig,
    pub duration_s: f64,
    pub mode: AcquisitionMode,
    pub correction: CorrectionMode,
    /// Parametric bootstrap resamples per error bar; 0 leaves error bars at 0.
    pub resamples: usize,
}

#[derive(Clone, Debug)]
pub struct TruthTableRun {
    pub table: TruthTable,
    pub fidelity: FidelityReport,
    pub acquisition: Acquisition,
}

#[derive(Clone, Debug)]
pub struct StateRun {
    pub input: String,
    pub ideal: DensityMatrix,
    pub result: QstResult,
    pub fidelity: FidelityReport,
    pub acquisition: Acquisition,
}

#[derive(Clone, Debug)]
pub struct StateBatch {
    pub runs: Vec<StateRun>,
    /// Mean fidelity; its error bar combines the per-state bars in quadrature.
    pub mean: FidelityReport,
}

#[derive(Clone, Debug)]
pub struct ProcessRun {
    pub result: QptResult,
    pub ptm: PauliTransferMatrix,
    pub fidelity: FidelityReport,
    pub average_gate: FidelityReport,
    pub acquisition: Acquisition,
}

#[derive(Clone, Debug)]
pub struct ChshRun {
    pub chsh: ChshResult,
    pub fringe: ScanResult,
}

impl Lab {
    pub fn new(noise: NoiseConfig, duration_s: f64, mode: AcquisitionMode) -> Self {
        Self {
            noise,
            duration_s,
            mode,
            correction: CorrectionMode::Apply,
            resamples: 0,
        }
    }

    pub fn with_resamples(mut self, resamples: usize) -> Self {
        self.resamples = resamples;
        self
    }

    fn mode_for(&self, stream: u64) -> AcquisitionMode {
        match self.mode {
            AcquisitionMode::Exact => AcquisitionMode::Exact,
            AcquisitionMode::Sampled { seed } => AcquisitionMode::Sampled {
                seed: derive_seed(seed, stream),
            },
        }
    }

    fn bootstrap_seed(&self, stream: u64) -> u64 {
        let master = match self.mode {
            AcquisitionMode::Exact => 0,
            AcquisitionMode::Sampled { seed } => seed,
        };
        derive_seed(master, stream | STREAM_BOOTSTRAP)
    }

    fn error_bar<F>(&self, obs: &[Observation], stream: u64, statistic: F) -> Result<f64>
    where
        F: Fn(&[Observation]) -> Result<f64> + Sync,
    {
        if self.resamples == 0 {
            return Ok(0.0);
        }
        Ok(bootstrap(obs, self.resamples, self.bootstrap_seed(stream), statistic)?.sigma)
    }

    fn protocol(&self) -> Result<(Protocol, EprResource)> {
        self.noise.validate()?;
        Ok((Protocol::from_noise(&self.noise), EprResource::from_noise(&self.noise)?))
    }

    /// Teleports `prep` and counts `settings` on the corrected output; each
    /// setting is tagged with the preparation when it is a product state.
    fn acquire_input(
        &self,
        prep: &InputStatePrep,
        settings: &[MeasurementSetting],
        stream: u64,
        first_index: u64,
    ) -> Result<Acquisition> {
        let (protocol, epr) = self.protocol()?;
        let run = protocol.run(prep, &epr, BranchSelection::All)?;
        let tagged: Vec<MeasurementSetting> = match prep {
            InputStatePrep::Kets(a, b) => settings.iter().map(|s| s.clone().with_input((*a, *b))).collect(),
            InputStatePrep::Amplitudes(_) => settings.to_vec(),
        };
        acquire_run(
            &run,
            &tagged,
            &self.noise,
            self.duration_s,
            self.mode_for(stream),
            self.correction,
            first_index,
        )
    }

    /// Computational inputs `|00>..|11>` against the four computational analyzers.
    pub fn truth_table(&self) -> Result<TruthTableRun> {
        let z = [BasisKet::Zero, BasisKet::One];
        let settings: Vec<MeasurementSetting> = z
            .iter()
            .flat_map(|&a| z.iter().map(move |&b| MeasurementSetting::data(a, b)))
            .collect();
        let mut acquisition = Acquisition::empty(self.mode_for(STREAM_TRUTH_TABLE));
        for (i, &a) in z.iter().enumerate() {
            for (j, &b) in z.iter().enumerate() {
                let k = (2 * i + j) as u64;
                acquisition.extend(self.acquire_input(
                    &InputStatePrep::kets(a, b),
                    &settings,
                    STREAM_TRUTH_TABLE,
                    4 * k,
                )?);
            }
        }
        let ideal = TruthTable::ideal_cnot();
        let table = truth_table_from(&acquisition.observations)?;
        let sigma = self.error_bar(&acquisition.observations, STREAM_TRUTH_TABLE, |o| {
            Ok(truth_table_fidelity(&truth_table_from(o)?, &ideal).value)
        })?;
        Ok(TruthTableRun {
            fidelity: truth_table_fidelity(&table, &ideal).with_error_bar(sigma),
            table,
            acquisition,
        })
    }

    /// Sixteen-setting tomography of the teleported output for one input,
    /// with the fidelity taken against `C14 |Ψ>`.
    pub fn state_tomography(&self, prep: &InputStatePrep) -> Result<StateRun> {
        let stream = STREAM_STATE + state_stream(prep);
        let acquisition = self.acquire_input(prep, &tomographic_settings(), stream, 0)?;
        let ideal = prep.ideal_output().to_density();
        let result = qst_reconstruct(&acquisition.observations)?;
        let sigma = self.error_bar(&acquisition.observations, stream, |o| {
            Ok(state_fidelity(&qst_reconstruct(o)?.state, &ideal)?.value)
        })?;
        Ok(StateRun {
            input: prep.token(),
            fidelity: state_fidelity(&result.state, &ideal)?.with_error_bar(sigma),
            ideal,
            result,
            acquisition,
        })
    }

    pub fn state_batch(&self, tokens: &[&str]) -> Result<StateBatch> {
        if tokens.is_empty() {
            return Err(Error::Config("empty input batch".into()));
        }
        let preps: Vec<InputStatePrep> = tokens.iter().map(|t| t.parse()).collect::<Result<_>>()?;
        let runs: Vec<StateRun> = preps
            .par_iter()
            .map(|p| self.state_tomography(p))
            .collect::<Result<_>>()?;
        let n = runs.len() as f64;
        let mean = runs.iter().map(|r| r.fidelity.value).sum::<f64>() / n;
        let sigma = runs.iter().map(|r| r.fidelity.error_bar.powi(2)).sum::<f64>().sqrt() / n;
        Ok(StateBatch {
            mean: FidelityReport::new(FidelityKind::State, mean, 4).with_error_bar(sigma),
            runs,
        })
    }

    /// 16 inputs × 16 analyzers, reconstructed jointly and compared with CNOT.
    pub fn process_tomography(&self) -> Result<ProcessRun> {
        let settings = tomographic_settings();
        let mut acquisition = Acquisition::empty(self.mode_for(STREAM_PROCESS));
        for (i, (a, b)) in tomographic_inputs().into_iter().enumerate() {
            acquisition.extend(self.acquire_input(
                &InputStatePrep::kets(a, b),
                &settings,
                STREAM_PROCESS,
                16 * i as u64,
            )?);
        }
        let ideal = ideal_cnot_chi()?;
        let result = qpt_reconstruct(&acquisition.observations)?;
        let sigma = self.error_bar(&acquisition.observations, STREAM_PROCESS, |o| {
            Ok(process_fidelity(&qpt_reconstruct(o)?.chi, &ideal)?.value)
        })?;
        let fidelity = process_fidelity(&result.chi, &ideal)?.with_error_bar(sigma);
        Ok(ProcessRun {
            ptm: result.chi.to_ptm(),
            average_gate: average_gate_report(&fidelity)?,
            fidelity,
            result,
            acquisition,
        })
    }

    /// CHSH value of the shared pair with accidentals subtracted, plus a
    /// fringe scan with the first analyzer at phase 0.
    pub fn chsh(&self, scan_points: usize) -> Result<ChshRun> {
        let (_, epr) = self.protocol()?;
        let chsh = chsh_measurement(
            epr.state(),
            &ChshAngles::OPTIMAL,
            &self.noise,
            self.duration_s,
            self.mode_for(STREAM_CHSH),
            true,
        )?;
        let fringe = fringe_scan(
            epr.state(),
            0.0,
            &default_phases(scan_points),
            &self.noise,
            self.duration_s,
            self.mode_for(STREAM_FRINGE),
        )?;
        Ok(ChshRun { chsh, fringe })
    }

    /// Delay scan over `±3` coherence times.
    pub fn hom(&self, coherence_ps: f64, scan_points: usize) -> Result<ScanResult> {
        self.noise.validate()?;
        hom_scan(
            &default_delays(coherence_ps, scan_points),
            coherence_ps,
            &self.noise,
            self.duration_s,
            self.mode_for(STREAM_HOM),
        )
    }
}

pub fn ideal_cnot_chi() -> Result<ChiMatrix> {
    ChiMatrix::from_unitary(&Gate::cnot("q1", "q4")?)
}

/// Row per tagged computational input, column per computational analyzer.
pub fn truth_table_from(obs: &[Observation]) -> Result<TruthTable> {
    let bit = |k: BasisKet| match k {
        BasisKet::Zero => Some(0),
        BasisKet::One => Some(1),
        _ => None,
    };
    let mut counts = [[0.0; 4]; 4];
    for o in obs {
        let (a, b) = o
            .setting
            .input()
            .ok_or_else(|| Error::Config(format!("untagged setting `{}`", o.setting.label())))?;
        let an = o.setting.analyzers();
        let cell = match (bit(a), bit(b), an.len()) {
            (Some(i), Some(j), 2) => bit(an[0].1).zip(bit(an[1].1)).map(|(k, l)| (2 * i + j, 2 * k + l)),
            _ => None,
        };
        let (row, col) =
            cell.ok_or_else(|| Error::Config(format!("`{}` is not a truth-table setting", o.setting.label())))?;
        counts[row][col] += o.counts;
    }
    TruthTable::from_counts(counts)
}

fn state_stream(prep: &InputStatePrep) -> u64 {
    InputStatePrep::all_product_tokens()
        .iter()
        .position(|p| p == prep)
        .map_or(0xff, |i| i as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{BELL_INPUTS, STATE_BATCH_INPUTS};

    fn exact(noise: NoiseConfig) -> Lab {
        Lab::new(noise, 10.0, AcquisitionMode::Exact)
    }

    #[test]
    fn ideal_exact_runs_are_perfect() {
        let lab = exact(NoiseConfig::ideal());
        assert!((lab.truth_table().unwrap().fidelity.value - 1.0).abs() < 1e-12);
        let s = lab.state_tomography(&"+0".parse().unwrap()).unwrap();
        assert!(s.fidelity.value > 1.0 - 1e-6, "{}", s.fidelity.value);
        let c = lab.chsh(16).unwrap();
        assert!((c.chsh.s - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
        let h = lab.hom(1.0, 41).unwrap();
        assert!((h.visibility - 1.0).abs() < 1e-6);
    }

    #[test]
    fn depolarized_truth_table_is_flat() {
        let lab = exact(NoiseConfig {
            werner_p: 0.0,
            visibility_v: 0.0,
            ..NoiseConfig::ideal()
        });
        let f = lab.truth_table().unwrap().fidelity.value;
        // a fully mixed pair still leaves the control bit intact
        assert!((f - 0.5).abs() < 1e-12, "{f}");
        let lab = exact(NoiseConfig {
            werner_p: 0.0,
            extinction_eps: 0.5,
            accidental_ratio: 1e6,
            ..NoiseConfig::ideal()
        });
        assert!((lab.truth_table().unwrap().fidelity.value - 0.25).abs() < 1e-5);
    }

    #[test]
    fn exact_runs_match_predictions() {
        let noise = crate::experiments::calibrated_noise().unwrap();
        let p = crate::noise::predict(&noise).unwrap();
        let lab = exact(noise);
        assert!((lab.truth_table().unwrap().fidelity.value - p.truth_table).abs() < 1e-10);
        let bell = lab.state_batch(&BELL_INPUTS).unwrap().mean.value;
        assert!((bell - p.bell).abs() < 1e-8, "{bell} vs {}", p.bell);
        let batch = lab.state_batch(&STATE_BATCH_INPUTS).unwrap().mean.value;
        assert!((batch - p.state).abs() < 1e-8, "{batch} vs {}", p.state);
        let process = lab.process_tomography().unwrap().fidelity.value;
        assert!((process - p.process).abs() < 1e-8, "{process} vs {}", p.process);
    }

    #[test]
    fn sampled_runs_are_seed_deterministic() {
        let noise = crate::experiments::calibrated_noise().unwrap();
        let lab = Lab::new(noise, 10.0, AcquisitionMode::Sampled { seed: 7 }).with_resamples(10);
        let a = lab.truth_table().unwrap();
        let b = lab.truth_table().unwrap();
        assert_eq!(a.acquisition, b.acquisition);
        assert_eq!(a.fidelity, b.fidelity);
        assert!(a.fidelity.error_bar > 0.0);
        let other = Lab {
            mode: AcquisitionMode::Sampled { seed: 8 },
            ..lab
        };
        assert_ne!(other.truth_table().unwrap().acquisition, a.acquisition);
    }

    #[test]
    fn truth_table_rejects_untagged_settings() {
        let obs = vec![Observation::new(MeasurementSetting::data(BasisKet::Zero, BasisKet::Zero), 1.0, 0.0)];
        assert!(truth_table_from(&obs).is_err());
    }
}
