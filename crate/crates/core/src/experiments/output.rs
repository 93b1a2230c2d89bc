use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::counts::write_atomic;
use crate::noise::NoiseConfig;
use crate::tomography::FidelityReport;
use crate::{Error, Result};

pub const LOCK_FILE: &str = ".lock";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Summary of one experiment run. Everything except `wall_clock_s` is a
/// function of the config and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: ExperimentKind,
    pub tool_version: String,
    pub config: ExperimentConfig,
    /// Noise knobs after resolving fixture paths.
    pub noise: NoiseConfig,
    pub mode: String,
    pub fidelities: BTreeMap<String, FidelityReport>,
    pub figures: BTreeMap<String, f64>,
    /// Artifact file names, relative to the report directory.
    pub artifacts: Vec<String>,
    pub wall_clock_s: f64,
}

impl Report {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: ExperimentKind,
    pub tag: String,
    pub report: String,
    pub artifacts: Vec<String>,
}

/// `root/<experiment>/<tag>/`, held exclusively through a lock file that is
/// removed on drop.
#[derive(Debug)]
pub struct OutputDir {
    path: PathBuf,
    lock: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path, experiment: ExperimentKind, tag: &str) -> Result<Self> {
        if tag.is_empty() || tag.contains(['/', '\\']) || tag == "." || tag == ".." {
            return Err(Error::Config(format!("invalid tag `{tag}`")));
        }
        let path = root.join(experiment.token()).join(tag);
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
        let lock = path.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(Error::Config(format!(
                    "{} is locked by another run ({} exists)",
                    path.display(),
                    lock.display()
                )))
            }
            Err(e) => return Err(Error::io(&lock, e)),
        }
        Ok(Self {
            path,
            lock,
            written: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.path.join(name), bytes)?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn artifacts(&self) -> &[String] {
        &self.written
    }

    /// Writes the report and the manifest; every listed artifact must exist.
    pub fn finish(mut self, tag: &str, mut report: Report) -> Result<Report> {
        report.artifacts = self.written.clone();
        for name in &report.artifacts {
            let p = self.path.join(name);
            if !p.is_file() {
                return Err(Error::io(&p, std::io::ErrorKind::NotFound.into()));
            }
        }
        self.write_json(REPORT_FILE, &report)?;
        let manifest = Manifest {
            experiment: report.experiment,
            tag: tag.to_string(),
            report: REPORT_FILE.to_string(),
            artifacts: report.artifacts.clone(),
        };
        self.write_json(MANIFEST_FILE, &manifest)?;
        Ok(report)
    }
}

impl Drop for OutputDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}
