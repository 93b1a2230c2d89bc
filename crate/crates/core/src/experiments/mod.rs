//! Reproducible end-to-end experiments and their on-disk reports.
//!
//! A run writes to `<root>/<experiment>/<tag>/`: the artifacts, a
//! `report.json` and a `manifest.json` index.

mod config;
mod lab;
mod output;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

pub use config::{
    calibrated_noise, fixture_dir, fixture_path, ExperimentConfig, ExperimentKind, NoiseSource,
    BATCH_TOKEN, CALIBRATED_COUNTS_FIXTURE, CALIBRATED_NOISE_FIXTURE, DEFAULT_BOOTSTRAP_RESAMPLES,
    DEFAULT_COHERENCE_PS, DEFAULT_DURATION_S, DEFAULT_SCAN_POINTS, FIXTURES_ENV,
};
pub use lab::{
    ideal_cnot_chi, truth_table_from, ChshRun, Lab, ProcessRun, StateBatch, StateRun,
    TruthTableRun,
};
pub use output::{Manifest, OutputDir, Report, LOCK_FILE, MANIFEST_FILE, REPORT_FILE};

use crate::counts::{to_csv, Acquisition, AcquisitionMode};
use crate::noise::{calibrate, CalibrationGrid, CalibrationTargets};
use crate::protocol::{InputStatePrep, BELL_INPUTS, STATE_BATCH_INPUTS};
use crate::tomography::FidelityReport;
use crate::{Error, Result};

pub const COUNTS_FILE: &str = "counts.csv";

/// Runs `experiment` under `cfg` into `root/<experiment>/<tag>/`.
pub fn run_experiment(
    experiment: ExperimentKind,
    cfg: &ExperimentConfig,
    root: &Path,
    tag: &str,
) -> Result<Report> {
    cfg.validate()?;
    let start = Instant::now();
    let noise = cfg.noise.resolve()?;
    let mode = if cfg.exact {
        AcquisitionMode::Exact
    } else {
        AcquisitionMode::Sampled { seed: cfg.seed }
    };
    let lab = Lab::new(noise, cfg.duration_s, mode).with_resamples(cfg.bootstrap_resamples);
    // validate inputs before touching the output directory
    let input = match experiment {
        ExperimentKind::Qst => Some(qst_input(cfg)?),
        _ => None,
    };

    let mut out = OutputDir::create(root, experiment, tag)?;
    let mut fidelities = BTreeMap::new();
    let mut figures = BTreeMap::new();
    match experiment {
        ExperimentKind::TruthTable => {
            let run = lab.truth_table()?;
            out.write("truth_table.csv", run.table.to_csv().as_bytes())?;
            write_counts(&mut out, &run.acquisition)?;
            fidelities.insert("truth_table".into(), run.fidelity);
        }
        ExperimentKind::Qst => match input.expect("parsed above") {
            QstInput::Single(prep) => {
                let run = lab.state_tomography(&prep)?;
                out.write_json("density_matrix.json", &run.result.state)?;
                write_counts(&mut out, &run.acquisition)?;
                fidelities.insert("state".into(), run.fidelity);
                figures.insert("mle_iterations".into(), run.result.iterations as f64);
            }
            QstInput::Batch => {
                let batch = lab.state_batch(&STATE_BATCH_INPUTS)?;
                write_batch(&mut out, &batch, "state", &mut fidelities)?;
            }
        },
        ExperimentKind::Bell => {
            let batch = lab.state_batch(&BELL_INPUTS)?;
            write_batch(&mut out, &batch, "bell", &mut fidelities)?;
        }
        ExperimentKind::Qpt => {
            let run = lab.process_tomography()?;
            out.write_json("chi.json", &run.result.chi)?;
            out.write("ptm.csv", &run.ptm.to_csv()?)?;
            write_counts(&mut out, &run.acquisition)?;
            fidelities.insert("process".into(), run.fidelity);
            fidelities.insert("average_gate".into(), run.average_gate);
            figures.insert("mle_iterations".into(), run.result.iterations as f64);
            figures.insert(
                "trace_preservation_error".into(),
                run.result.chi.trace_preservation_error(),
            );
        }
        ExperimentKind::Chsh => {
            let run = lab.chsh(cfg.scan_points)?;
            out.write_json("chsh.json", &run.chsh)?;
            out.write("fringe.json", run.fringe.to_json()?.as_bytes())?;
            out.write("fringe.csv", &run.fringe.to_csv()?)?;
            figures.insert("chsh_s".into(), run.chsh.s);
            figures.insert("chsh_s_error".into(), run.chsh.s_error);
            figures.insert("fringe_visibility".into(), run.fringe.visibility);
            figures.insert("fringe_raw_visibility".into(), run.fringe.raw_visibility);
        }
        ExperimentKind::Hom => {
            let scan = lab.hom(cfg.coherence_ps, cfg.scan_points)?;
            out.write("hom.json", scan.to_json()?.as_bytes())?;
            out.write("hom.csv", &scan.to_csv()?)?;
            figures.insert("hom_visibility".into(), scan.visibility);
            figures.insert("hom_visibility_error".into(), scan.visibility_error);
            figures.insert("hom_raw_visibility".into(), scan.raw_visibility);
        }
        ExperimentKind::Calibrate => {
            let targets = cfg.targets.unwrap_or(CalibrationTargets::HEADLINE);
            let cal = calibrate(&targets, &CalibrationGrid::default())?;
            out.write("calibrated_noise.json", format!("{}\n", cal.config.to_json()).as_bytes())?;
            out.write_json("calibration.json", &cal)?;
            figures.insert("residual".into(), cal.residual);
            figures.insert("evaluations".into(), cal.evaluations as f64);
            let p = cal.predictions;
            for (name, v) in [
                ("truth_table", p.truth_table),
                ("state", p.state),
                ("bell", p.bell),
                ("process", p.process),
                ("chsh_s", p.chsh),
                ("hom_visibility", p.hom_visibility),
            ] {
                figures.insert(format!("predicted_{name}"), v);
            }
        }
    }

    let report = Report {
        experiment,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        noise,
        mode: if cfg.exact { "exact" } else { "sampled" }.to_string(),
        fidelities,
        figures,
        artifacts: Vec::new(),
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    out.finish(tag, report)
}

enum QstInput {
    Single(InputStatePrep),
    Batch,
}

fn qst_input(cfg: &ExperimentConfig) -> Result<QstInput> {
    match cfg.input_state.as_deref() {
        None => Err(Error::Config(format!(
            "qst needs input_state: a product token such as \"+0\" or \"{BATCH_TOKEN}\""
        ))),
        Some(BATCH_TOKEN) => Ok(QstInput::Batch),
        Some(token) => Ok(QstInput::Single(token.parse()?)),
    }
}

fn write_counts(out: &mut OutputDir, acquisition: &Acquisition) -> Result<()> {
    match &acquisition.records {
        Some(records) => out.write(COUNTS_FILE, &to_csv(records)?),
        None => Ok(()),
    }
}

fn write_batch(
    out: &mut OutputDir,
    batch: &StateBatch,
    prefix: &str,
    fidelities: &mut BTreeMap<String, FidelityReport>,
) -> Result<()> {
    let mut acquisition: Option<Acquisition> = None;
    for run in &batch.runs {
        out.write_json(&format!("density_{}.json", run.input), &run.result.state)?;
        fidelities.insert(format!("{prefix}:{}", run.input), run.fidelity);
        match &mut acquisition {
            Some(a) => a.extend(run.acquisition.clone()),
            None => acquisition = Some(run.acquisition.clone()),
        }
    }
    fidelities.insert(format!("{prefix}_mean"), batch.mean);
    match acquisition {
        Some(a) => write_counts(out, &a),
        None => Ok(()),
    }
}
