use serde::{Deserialize, Serialize};

use super::report::{FidelityKind, FidelityReport};
use crate::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-6;

/// Row-stochastic 4×4 table: rows are computational inputs `|00>..|11>`,
/// columns the measured outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    rows: [[f64; 4]; 4],
}

impl TruthTable {
    pub fn new(rows: [[f64; 4]; 4]) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|&x| !(-1e-12..=1.0 + 1e-12).contains(&x)) {
                return Err(Error::InvalidState(format!("row {i} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidState(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self { rows })
    }

    /// Row-normalizes nonnegative counts.
    pub fn from_counts(counts: [[f64; 4]; 4]) -> Result<Self> {
        let mut rows = [[0.0; 4]; 4];
        for (i, row) in counts.iter().enumerate() {
            if row.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(Error::InvalidState(format!("row {i} has invalid counts")));
            }
            let sum: f64 = row.iter().sum();
            if sum <= 0.0 {
                return Err(Error::EmptyRow(i));
            }
            for j in 0..4 {
                rows[i][j] = row[j] / sum;
            }
        }
        Self::new(rows)
    }

    /// CNOT with the first qubit as control.
    pub fn ideal_cnot() -> Self {
        Self {
            rows: [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 1.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
        }
    }

    pub fn uniform() -> Self {
        Self {
            rows: [[0.25; 4]; 4],
        }
    }

    pub fn rows(&self) -> &[[f64; 4]; 4] {
        &self.rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("input,00,01,10,11\n");
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&format!("{:02b}", i));
            for x in row {
                out.push_str(&format!(",{x}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Mean over inputs of `<row_exp, row_ideal>`, i.e. the mean probability of
/// the correct output when the ideal table is a permutation.
pub fn truth_table_fidelity(exp: &TruthTable, ideal: &TruthTable) -> FidelityReport {
    let value = exp
        .rows
        .iter()
        .zip(&ideal.rows)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
        .sum::<f64>()
        / 4.0;
    FidelityReport::new(FidelityKind::TruthTable, value, 4)
}
