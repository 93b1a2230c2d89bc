use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::noise::{CalibrationTargets, NoiseConfig};
use crate::{Error, Result};

/// Environment variable overriding the fixture directory.
pub const FIXTURES_ENV: &str = "TELEPORT_LAB_FIXTURES";
/// File name of the calibrated noise fixture.
pub const CALIBRATED_NOISE_FIXTURE: &str = "calibrated_noise.json";
/// File name of the sampled process-tomography count fixture.
pub const CALIBRATED_COUNTS_FIXTURE: &str = "calibrated_qpt_counts.csv";

pub const DEFAULT_DURATION_S: f64 = 10.0;
pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = crate::tomography::DEFAULT_RESAMPLES;
pub const DEFAULT_COHERENCE_PS: f64 = 1.0;
pub const DEFAULT_SCAN_POINTS: usize = 41;

/// `input_state` value selecting the 14-state tomography batch.
pub const BATCH_TOKEN: &str = "batch";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    TruthTable,
    Qst,
    Bell,
    Qpt,
    Chsh,
    Hom,
    Calibrate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::TruthTable,
        ExperimentKind::Qst,
        ExperimentKind::Bell,
        ExperimentKind::Qpt,
        ExperimentKind::Chsh,
        ExperimentKind::Hom,
        ExperimentKind::Calibrate,
    ];

    pub fn token(self) -> &'static str {
        match self {
            ExperimentKind::TruthTable => "truth-table",
            ExperimentKind::Qst => "qst",
            ExperimentKind::Bell => "bell",
            ExperimentKind::Qpt => "qpt",
            ExperimentKind::Chsh => "chsh",
            ExperimentKind::Hom => "hom",
            ExperimentKind::Calibrate => "calibrate",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.token() == s)
            .ok_or_else(|| Error::InvalidToken {
                token: s.to_string(),
                expected: format!(
                    "one of {}",
                    ExperimentKind::ALL.map(ExperimentKind::token).join(", ")
                ),
            })
    }
}

/// Inline knobs, or a path to a noise JSON file. Relative paths are looked up
/// in the fixture directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseSource {
    Inline(NoiseConfig),
    Fixture(PathBuf),
}

impl Default for NoiseSource {
    fn default() -> Self {
        NoiseSource::Inline(NoiseConfig::ideal())
    }
}

impl NoiseSource {
    pub fn resolve(&self) -> Result<NoiseConfig> {
        match self {
            NoiseSource::Inline(cfg) => {
                cfg.validate()?;
                Ok(*cfg)
            }
            NoiseSource::Fixture(path) => NoiseConfig::load(&fixture_path(path)),
        }
    }
}

/// `$TELEPORT_LAB_FIXTURES`, else the repository's `fixtures/` directory.
pub fn fixture_dir() -> PathBuf {
    match std::env::var_os(FIXTURES_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"),
    }
}

pub fn fixture_path(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        fixture_dir().join(path)
    }
}

/// The committed calibrated noise configuration.
pub fn calibrated_noise() -> Result<NoiseConfig> {
    NoiseConfig::load(&fixture_path(Path::new(CALIBRATED_NOISE_FIXTURE)))
}

fn default_duration() -> f64 {
    DEFAULT_DURATION_S
}

fn default_resamples() -> usize {
    DEFAULT_BOOTSTRAP_RESAMPLES
}

fn default_coherence() -> f64 {
    DEFAULT_COHERENCE_PS
}

fn default_scan_points() -> usize {
    DEFAULT_SCAN_POINTS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub noise: NoiseSource,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    /// Must agree with the experiment named on the command line when set.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    /// Product token such as `"+0"`, or `"batch"` for the 14-state batch.
    #[serde(default)]
    pub input_state: Option<String>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Expectation-value counts instead of Poisson draws.
    #[serde(default)]
    pub exact: bool,
    /// Parametric bootstrap resamples behind each error bar; 0 disables.
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
    #[serde(default = "default_coherence")]
    pub coherence_ps: f64,
    /// Points in the HOM delay and fringe phase scans.
    #[serde(default = "default_scan_points")]
    pub scan_points: usize,
    /// Calibration targets; the headline figures when absent.
    #[serde(default)]
    pub targets: Option<CalibrationTargets>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            noise: NoiseSource::default(),
            seed: 0,
            duration_s: DEFAULT_DURATION_S,
            experiment: None,
            input_state: None,
            output_dir: None,
            exact: false,
            bootstrap_resamples: DEFAULT_BOOTSTRAP_RESAMPLES,
            coherence_ps: DEFAULT_COHERENCE_PS,
            scan_points: DEFAULT_SCAN_POINTS,
            targets: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::OutOfRange {
                name: "duration_s",
                value: self.duration_s,
                range: "(0, inf)",
            });
        }
        if self.bootstrap_resamples == 1 {
            return Err(Error::OutOfRange {
                name: "bootstrap_resamples",
                value: 1.0,
                range: "0 or [2, inf)",
            });
        }
        if let Some(t) = &self.targets {
            t.validate()?;
        }
        Ok(())
    }

    /// The experiment to run: `requested` must match the config's own field
    /// when both are given.
    pub fn experiment_for(&self, requested: Option<ExperimentKind>) -> Result<ExperimentKind> {
        match (requested, self.experiment) {
            (Some(a), Some(b)) if a != b => Err(Error::Config(format!(
                "command line asks for `{a}` but the config names `{b}`"
            ))),
            (Some(a), _) | (None, Some(a)) => Ok(a),
            (None, None) => Err(Error::Config("no experiment given".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_tokens_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.token().parse::<ExperimentKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{k}\""));
        }
        let err = "tomo".parse::<ExperimentKind>().unwrap_err();
        assert!(err.to_string().contains("truth-table, qst, bell, qpt, chsh, hom, calibrate"));
    }

    #[test]
    fn config_defaults_and_noise_forms() {
        let cfg = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.noise.resolve().unwrap(), NoiseConfig::ideal());

        let cfg = ExperimentConfig::from_json(r#"{"noise": "calibrated_noise.json", "seed": 42}"#).unwrap();
        assert_eq!(cfg.noise, NoiseSource::Fixture("calibrated_noise.json".into()));
        assert_eq!(cfg.noise.resolve().unwrap(), calibrated_noise().unwrap());

        let inline = r#"{"noise": {"werner_p": 0.9, "extinction_eps": 0.01, "visibility_v": 0.95,
            "accidental_ratio": 0.1, "pair_rate_hz": 200}}"#;
        let cfg = ExperimentConfig::from_json(inline).unwrap();
        assert_eq!(cfg.noise.resolve().unwrap().gate_dephasing, 0.0);
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(ExperimentConfig::from_json(r#"{"sed": 1}"#).unwrap_err().is_config_error());
        assert!(ExperimentConfig::from_json(r#"{"duration_s": 0}"#).unwrap_err().is_config_error());
        assert!(ExperimentConfig::from_json(r#"{"experiment": "tomo"}"#).is_err());
        let cfg = ExperimentConfig {
            experiment: Some(ExperimentKind::Qst),
            ..Default::default()
        };
        assert!(cfg.experiment_for(Some(ExperimentKind::Qpt)).is_err());
        assert_eq!(cfg.experiment_for(None).unwrap(), ExperimentKind::Qst);
    }
}
