//! Non-local CNOT by gate teleportation.
//!
//! `q1` (Alice) and `q4` (Bob) hold the data; `q2`/`q3` hold the shared pair.
//! After `C12: q1 -> q2` and `C34: q3 -> q4`, Alice measures `q2` in Z and Bob
//! measures `q3` in X. Each party sends one bit and the data qubits are fixed
//! up with `I`, `Z1`, `X4` or `-Z1 X4`.

mod audit;
mod engine;
mod local;
mod prep;
mod transcript;

pub use audit::{identity_deviation, orientation_audit, random_data_state, OrientationAudit};
pub use engine::{
    classical_cost, correction_for, messages_for, run_protocol, state_teleportation_baseline_cost,
    BitMeaning, Branch, BranchSelection, BranchState, ClassicalMessage, Correction, EprKind,
    EprResource, LocalGate, LocalGates, Orientation, Outcome, Party, Protocol, ProtocolRun, XSign,
    EPR_QUBITS, REGISTER, ZERO_PROBABILITY,
};
pub use local::{channel_truth_table, local_truth_table};
pub use prep::{InputStatePrep, BELL_INPUTS, DATA_QUBITS, STATE_BATCH_INPUTS};
pub use transcript::{transcript_lines, write_transcript, TranscriptLine};
