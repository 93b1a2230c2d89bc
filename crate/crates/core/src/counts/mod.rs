//! Coincidence counting: measurement settings, the count model, acquisition
//! from protocol runs, CSV persistence, and the HOM and CHSH scans.

mod acquire;
mod chsh;
mod hom;
mod model;
mod record;
mod scan;
mod setting;

pub use acquire::{
    acquire, acquire_run, acquire_state, run_probability, state_probability, Acquisition,
    AcquisitionMode, CorrectionMode,
};
pub use model::{
    derive_seed, expected_accidentals, expected_counts, sample_counts, sample_with,
    ACCIDENTAL_PROJECTION,
};
#[allow(unused_imports)]
pub(crate) use record::write_atomic;
pub use record::{from_csv, load, observations, persist, to_csv, CountRecord, Observation, CSV_HEADER};
pub use setting::{computational_settings, tomographic_inputs, tomographic_settings, MeasurementSetting};
pub use chsh::{
    chsh_measurement, chsh_value, default_phases, equatorial_projector, fringe_scan, ChshAngles,
    ChshResult,
};
pub use hom::{default_delays, fit_hom, hom_accidentals, hom_expected, hom_scan, HOM_MIN_POINTS};
pub use scan::{ScanKind, ScanResult};
