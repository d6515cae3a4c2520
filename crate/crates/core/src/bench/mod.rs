//! Experiment harness: configuration, repeated runs, CSV output and the
//! verification suite.

pub mod config;
pub mod experiment;
pub mod verify;

pub use config::{ExperimentConfig, PolicyId, PolicySpec};
pub use experiment::{
    moving_average, run_experiment, run_single, write_outputs, AggregateCurve, ExperimentResult,
    ResolvedPolicy,
};
pub use verify::{verify_all, VerifyLevel, VerifyReport};
