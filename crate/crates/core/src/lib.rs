//! Numerical laboratory for non-local CNOT gate teleportation.
//!
//! Two parties share an EPR pair on communication qubits `q2`/`q3`. Alice
//! applies a local CNOT `q1 -> q2` and measures `q2` in the Z basis, Bob
//! applies `q3 -> q4` and measures `q3` in the X basis, and after two
//! classical bits are exchanged the data qubits `q1`/`q4` carry the output of
//! a CNOT acting between them.
//!
//! The crate is organised as:
//!
//! - [`quantum`]: dense few-qubit linear algebra (states, gates, partial
//!   trace, PSD square roots, Bell and wave-plate constructors).
//! - [`protocol`]: the teleportation engine and its correction table.
//! - [`noise`]: imperfection channels and calibration against target
//!   fidelities.
//! - [`counts`]: coincidence-count modeling, HOM and CHSH scans, CSV records.
//! - [`tomography`]: truth tables, maximum-likelihood state and process
//!   tomography, fidelity metrics.
//! - [`experiments`]: reproducible end-to-end runs used by the CLI.

// `!(x > 0.0)` style checks are kept so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counts;
pub mod error;
pub mod experiments;
pub mod noise;
pub mod protocol;
pub mod quantum;
pub mod tomography;

pub use error::{Error, Result};
