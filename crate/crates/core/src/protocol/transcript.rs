use std::io::Write;

use serde::{Deserialize, Serialize};

use super::engine::{BranchState, ProtocolRun};
use crate::{Error, Result};

/// One JSON line per realized branch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub input: String,
    pub outcome: String,
    pub probability: f64,
    pub correction: String,
    pub classical_bits: [u8; 2],
    /// `<input>/<outcome>` for defined branches, `null` otherwise.
    pub state_ref: Option<String>,
}

pub fn transcript_lines(run: &ProtocolRun) -> Vec<TranscriptLine> {
    run.branches
        .iter()
        .map(|b| {
            let [alice, bob] = b.messages();
            TranscriptLine {
                input: run.input.clone(),
                outcome: b.outcome.to_string(),
                probability: b.probability,
                correction: b.correction.label(),
                classical_bits: [alice.bit, bob.bit],
                state_ref: match b.corrected {
                    BranchState::Defined(_) => Some(format!("{}/{}", run.input, b.outcome)),
                    BranchState::Undefined => None,
                },
            }
        })
        .collect()
}

pub fn write_transcript<W: Write>(mut w: W, runs: &[ProtocolRun]) -> Result<()> {
    for run in runs {
        for line in transcript_lines(run) {
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n").map_err(|e| Error::io("<transcript>", e))?;
        }
    }
    Ok(())
}
