use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanKind {
    Hom,
    Fringe,
}

/// A one-dimensional count scan with its fitted curve and visibilities.
///
/// `raw_visibility` includes accidentals; `visibility` has the accidental
/// estimate removed from the baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub kind: ScanKind,
    pub x_label: String,
    pub x: Vec<f64>,
    pub counts: Vec<f64>,
    pub fit: Vec<f64>,
    pub accidental_estimate: f64,
    pub raw_visibility: f64,
    pub raw_visibility_error: f64,
    pub visibility: f64,
    pub visibility_error: f64,
    pub reduced_chi2: f64,
    pub parameters: BTreeMap<String, f64>,
}

impl ScanResult {
    pub fn validate(&self) -> Result<()> {
        check_axis(&self.x)?;
        if self.counts.len() != self.x.len() || self.fit.len() != self.x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x.len(),
                got: self.counts.len().min(self.fit.len()),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scan: Self = serde_json::from_str(text)?;
        scan.validate()?;
        Ok(scan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// `x,counts,fit` rows.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let row_err = |e: csv::Error| Error::Config(format!("csv: {e}"));
        w.write_record([self.x_label.as_str(), "counts", "fit"])
            .map_err(row_err)?;
        for i in 0..self.x.len() {
            w.write_record([
                self.x[i].to_string(),
                self.counts[i].to_string(),
                self.fit[i].to_string(),
            ])
            .map_err(row_err)?;
        }
        w.into_inner()
            .map_err(|e| Error::Config(format!("csv buffer: {e}")))
    }
}

/// Scan axes must be finite and strictly increasing.
pub(crate) fn check_axis(x: &[f64]) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidState("scan axis contains a non-finite value".into()));
    }
    if x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("scan axis must be strictly increasing".into()));
    }
    Ok(())
}

/// Weighted linear least squares for `y ≈ X c` with per-point weights.
pub(crate) struct LinearFit {
    pub coef: DVector<f64>,
    /// `(Xᵀ W X)⁻¹`, the covariance when weights are inverse variances.
    pub cov: DMatrix<f64>,
    pub chi2: f64,
}

pub(crate) fn weighted_lstsq(design: &DMatrix<f64>, y: &[f64], w: &[f64]) -> Result<LinearFit> {
    let (n, k) = design.shape();
    let mut normal = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    for i in 0..n {
        let row = design.row(i);
        normal += row.transpose() * row * w[i];
        rhs += row.transpose() * (w[i] * y[i]);
    }
    let cov = normal
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateCounts("singular fit design".into()))?;
    let coef = &cov * rhs;
    let chi2 = (0..n)
        .map(|i| {
            let r = y[i] - (design.row(i) * &coef)[0];
            w[i] * r * r
        })
        .sum();
    Ok(LinearFit { coef, cov, chi2 })
}

/// Poisson weights `1 / max(y, 1)`.
pub(crate) fn poisson_weights(y: &[f64]) -> Vec<f64> {
    y.iter().map(|v| 1.0 / v.max(1.0)).collect()
}

/// `amp / (base - acc)` and its first-order error from the covariance of
/// `(base, amp)`.
pub(crate) fn ratio_with_error(
    amp: f64,
    base: f64,
    acc: f64,
    var_amp: f64,
    var_base: f64,
    cov: f64,
) -> Result<(f64, f64)> {
    let d = base - acc;
    if !(d > 0.0) {
        return Err(Error::DegenerateCounts(format!(
            "baseline {base} does not exceed accidentals {acc}"
        )));
    }
    let v = amp / d;
    let var = var_amp / (d * d) + amp * amp * var_base / d.powi(4) - 2.0 * amp * cov / d.powi(3);
    Ok((v, var.max(0.0).sqrt()))
}
