//! Imperfection channels and calibration of their strengths.

mod calibrate;
mod channel;
mod config;
mod models;

pub use calibrate::{
    calibrate, pair_rate_for, predict, Axis, Calibration, CalibrationGrid, CalibrationTargets,
    Predictions, CALIBRATION_WINDOW_S, INFEASIBLE_RESIDUAL, TARGET_TRUTH_TABLE_SIGMA,
};
pub use channel::{Channel, CHOI_PSD_TOL, KRAUS_TOL};
pub use config::{NoiseConfig, DEFAULT_PAIR_RATE_HZ};
pub use models::{dephase_pair, leaky_cnot, phase_flip, werner, werner_on};
