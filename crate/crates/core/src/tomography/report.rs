use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityKind {
    TruthTable,
    State,
    Process,
    AverageGate,
}

impl fmt::Display for FidelityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FidelityKind::TruthTable => "truth_table",
            FidelityKind::State => "state",
            FidelityKind::Process => "process",
            FidelityKind::AverageGate => "average_gate",
        })
    }
}

/// A fidelity with its 1σ bootstrap error bar (0 when not resampled).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub kind: FidelityKind,
    pub value: f64,
    pub error_bar: f64,
    /// Hilbert-space dimension of the system the fidelity refers to.
    pub d: usize,
}

impl FidelityReport {
    pub fn new(kind: FidelityKind, value: f64, d: usize) -> Self {
        Self {
            kind,
            value,
            error_bar: 0.0,
            d,
        }
    }

    pub fn with_error_bar(mut self, sigma: f64) -> Self {
        self.error_bar = sigma;
        self
    }
}

impl fmt::Display for FidelityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {:.4} ± {:.4}", self.kind, self.value, self.error_bar)
    }
}

/// `F_avg = (d F_p + 1) / (d + 1)`.
pub fn average_gate_fidelity(process_fidelity: f64, d: usize) -> Result<FidelityReport> {
    if !(0.0..=1.0).contains(&process_fidelity) {
        return Err(Error::OutOfRange {
            name: "process fidelity",
            value: process_fidelity,
            range: "[0, 1]",
        });
    }
    if d < 2 {
        return Err(Error::OutOfRange {
            name: "d",
            value: d as f64,
            range: "[2, inf)",
        });
    }
    let d_f = d as f64;
    Ok(FidelityReport::new(
        FidelityKind::AverageGate,
        (d_f * process_fidelity + 1.0) / (d_f + 1.0),
        d,
    ))
}

/// Converts a process report, propagating its error bar linearly.
pub fn average_gate_report(process: &FidelityReport) -> Result<FidelityReport> {
    let d = process.d;
    let slope = d as f64 / (d as f64 + 1.0);
    Ok(average_gate_fidelity(process.value, d)?.with_error_bar(slope * process.error_bar))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_gate_examples() {
        let f = average_gate_fidelity(0.831, 4).unwrap().value;
        assert!((f - 0.8648).abs() < 1e-12);
        assert_eq!(average_gate_fidelity(1.0, 4).unwrap().value, 1.0);
        assert!((average_gate_fidelity(0.25, 4).unwrap().value - 0.4).abs() < 1e-15);
        assert!(average_gate_fidelity(1.2, 4).is_err());
        assert!(average_gate_fidelity(0.5, 1).is_err());
    }

    #[test]
    fn average_gate_is_affine_with_slope_d_over_d_plus_one() {
        for d in [2usize, 4, 8] {
            let f0 = average_gate_fidelity(0.0, d).unwrap().value;
            for k in 1..=10 {
                let x = k as f64 / 10.0;
                let f = average_gate_fidelity(x, d).unwrap().value;
                let expected = f0 + x * d as f64 / (d as f64 + 1.0);
                assert!((f - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn report_json_shape() {
        let r = FidelityReport::new(FidelityKind::AverageGate, 0.5, 4).with_error_bar(0.01);
        let v = serde_json::to_value(r).unwrap();
        assert_eq!(v["kind"], "average_gate");
        assert_eq!(v["d"], 4);
        let p = FidelityReport::new(FidelityKind::Process, 0.831, 4).with_error_bar(0.02);
        let a = average_gate_report(&p).unwrap();
        assert!((a.error_bar - 0.016).abs() < 1e-15);
    }
}
