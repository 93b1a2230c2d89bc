use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Pair rate used when no calibration has set one.
pub const DEFAULT_PAIR_RATE_HZ: f64 = 1000.0;

/// Scalar imperfection knobs for one experimental configuration.
///
/// - `werner_p`: weight of the ideal EPR pair against white noise.
/// - `extinction_eps`: bit-error probability of each chip CNOT.
/// - `visibility_v`: coherence retained by the EPR source.
/// - `accidental_ratio`: accidental coincidences per true coincidence.
/// - `pair_rate_hz`: post-selected pair rate.
/// - `gate_dephasing`: phase-error probability on the target of the remote CNOT.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub werner_p: f64,
    pub extinction_eps: f64,
    pub visibility_v: f64,
    pub accidental_ratio: f64,
    pub pair_rate_hz: f64,
    #[serde(default)]
    pub gate_dephasing: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self::ideal()
    }
}

fn in_range(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if value.is_finite() && (lo..=hi).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}

impl NoiseConfig {
    pub fn ideal() -> Self {
        Self {
            werner_p: 1.0,
            extinction_eps: 0.0,
            visibility_v: 1.0,
            accidental_ratio: 0.0,
            pair_rate_hz: DEFAULT_PAIR_RATE_HZ,
            gate_dephasing: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        in_range("werner_p", self.werner_p, 0.0, 1.0, "[0, 1]")?;
        in_range("extinction_eps", self.extinction_eps, 0.0, 0.5, "[0, 0.5]")?;
        in_range("visibility_v", self.visibility_v, 0.0, 1.0, "[0, 1]")?;
        in_range("accidental_ratio", self.accidental_ratio, 0.0, f64::MAX, "[0, inf)")?;
        in_range("gate_dephasing", self.gate_dephasing, 0.0, 0.5, "[0, 0.5]")?;
        if !(self.pair_rate_hz.is_finite() && self.pair_rate_hz > 0.0) {
            return Err(Error::OutOfRange {
                name: "pair_rate_hz",
                value: self.pair_rate_hz,
                range: "(0, inf)",
            });
        }
        Ok(())
    }

    /// Weight of white noise that accidentals add to every measured
    /// distribution: `a / (1 + a)`.
    pub fn accidental_weight(&self) -> f64 {
        self.accidental_ratio / (1.0 + self.accidental_ratio)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: NoiseConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}
