use super::engine::{LocalGate, LocalGates};
use crate::noise::{Channel, NoiseConfig};
use crate::quantum::linalg::{self, CMatrix};
use crate::quantum::Register;
use crate::tomography::TruthTable;
use crate::{Error, Result};

/// Computational-basis truth table of one noisy chip gate, inputs and outputs
/// ordered as the gate's `(control, target)`.
pub fn local_truth_table(gate: LocalGate, cfg: &NoiseConfig) -> Result<TruthTable> {
    cfg.validate()?;
    channel_truth_table(&LocalGates::from_noise(cfg).channel(gate)?)
}

/// Truth table of any two-qubit channel.
pub fn channel_truth_table(channel: &Channel) -> Result<TruthTable> {
    if channel.num_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: channel.num_qubits(),
        });
    }
    let labels = channel.labels().to_vec();
    let mut rows = [[0.0; 4]; 4];
    for (i, row) in rows.iter_mut().enumerate() {
        let mut input = CMatrix::zeros(4, 4);
        input[(i, i)] = linalg::ONE;
        let out = channel.apply_matrix(&input, &labels)?;
        for (j, x) in row.iter_mut().enumerate() {
            *x = out[(j, j)].re.max(0.0);
        }
    }
    TruthTable::new(rows)
}
