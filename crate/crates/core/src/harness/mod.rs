//! Config-driven experiments: replicated error estimates, free energies,
//! posterior summaries and the files they are written to.

pub mod config;
pub mod experiment;
pub mod free_energy;

pub use config::{ExperimentConfig, Method, Preset, Stage};
pub use experiment::{
    error_curve, estimate_error, estimate_errors, run_experiment, table1, theorem_check, ErrorCurveRow, ErrorEstimate,
    ErrorSetup, Exclusion, Manifest, RunSummary, Table1Row, TheoremRow,
};
pub use free_energy::{free_energy, free_energy_kl, FreeEnergyKind};
