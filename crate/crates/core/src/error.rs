use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit label collision: {0}")]
    LabelCollision(String),

    #[error("unknown qubit label: {0}")]
    UnknownLabel(String),

    #[error("empty qubit selection")]
    EmptySelection,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("matrix is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("Kraus operators are not trace preserving (deviation {0:.3e})")]
    NotTracePreserving(f64),

    #[error("parameter `{name}` = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("run has no completed branches")]
    AbortedRun,

    #[error("singular design matrix (smallest singular value {0:.3e})")]
    SingularDesign(f64),

    #[error("no counts recorded")]
    NoCounts,

    #[error("truth-table row {0} has no counts")]
    EmptyRow(usize),

    #[error("missing input preparations: {0}")]
    MissingInputs(String),

    #[error("fit underdetermined: {0}")]
    Underdetermined(String),

    #[error("degenerate counts: {0}")]
    DegenerateCounts(String),

    #[error("calibration infeasible: residual {residual:.4} exceeds {threshold}")]
    Infeasible { residual: f64, threshold: f64 },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid token `{token}`: {expected}")]
    InvalidToken { token: String, expected: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by user input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidToken { .. }
                | Error::Config(_)
                | Error::Json(_)
                | Error::OutOfRange { .. }
                | Error::Parse { .. }
        )
    }
}
