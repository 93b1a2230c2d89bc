//! Command-line front end: one experiment per invocation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::builder::PossibleValuesParser;
use clap::Parser;
use teleport_lab::experiments::{run_experiment, ExperimentConfig, ExperimentKind};
use teleport_lab::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "teleport-lab", version, about = "Simulated non-local CNOT gate teleportation experiments")]
struct Cli {
    /// Experiment to run.
    #[arg(value_parser = PossibleValuesParser::new(ExperimentKind::ALL.map(ExperimentKind::token)))]
    experiment: String,

    /// Experiment config (JSON).
    #[arg(long, value_name = "JSON")]
    config: PathBuf,

    /// Master seed for sampled counts; overrides the config.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Use expectation values instead of Poisson draws.
    #[arg(long)]
    exact: bool,

    /// Input token for qst, e.g. "+0", or "batch" for the 14-state batch.
    #[arg(long, value_name = "TOKEN")]
    input: Option<String>,

    /// Output root; reports go to <out>/<experiment>/<tag>/.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Run directory name; defaults to a UTC timestamp.
    #[arg(long, value_name = "NAME")]
    tag: Option<String>,
}

fn run(cli: Cli) -> Result<(), Error> {
    let experiment: ExperimentKind = cli.experiment.parse()?;
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    let experiment = cfg.experiment_for(Some(experiment))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.exact {
        cfg.exact = true;
    }
    if let Some(input) = cli.input {
        cfg.input_state = Some(input);
    }
    let root = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let tag = cli
        .tag
        .unwrap_or_else(|| chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string());
    let report = run_experiment(experiment, &cfg, &root, &tag)?;
    for (name, f) in &report.fidelities {
        println!("{name}: {:.4} ± {:.4}", f.value, f.error_bar);
    }
    for (name, v) in &report.figures {
        println!("{name}: {v:.6}");
    }
    println!("report: {}", root.join(experiment.token()).join(&tag).display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() || matches!(e, Error::Io { .. }) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::from(EXIT_NUMERICAL)
            }
        }
    }
}
