//! Truth tables, state and process tomography, fidelity metrics.

mod bootstrap;
mod metrics;
mod process;
mod qpt;
mod qst;
mod report;
mod truth_table;

pub use report::{average_gate_fidelity, average_gate_report, FidelityKind, FidelityReport};
pub use truth_table::{truth_table_fidelity, TruthTable};
pub use metrics::{state_fidelity, uhlmann_fidelity, CLAMP_WARN_MASS, FIDELITY_PSD_TOL};
pub use qst::{profiled_log_likelihood, qst_reconstruct, qst_reconstruct_with, MleOptions, QstResult, SINGULAR_RATIO};
pub use process::{
    apply_choi, choi_output_trace, process_fidelity, ChiMatrix, PauliTransferMatrix, CHI_HERMITIAN_TOL,
    CHI_PSD_TOL, CHI_TP_TOL,
};
pub use bootstrap::{bootstrap, resample, BootstrapSummary, DEFAULT_RESAMPLES};
pub use qpt::{qpt_reconstruct, qpt_reconstruct_with, QptResult, PROJECTION_ROUNDS, PROJECTION_TOL};
