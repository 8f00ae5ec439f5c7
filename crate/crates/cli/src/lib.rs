//! Batch experiments for the distributed min-max solver: configuration,
//! orchestration, output files, and offline trace checking.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod replay;

pub use config::{ExperimentConfig, Overrides};
pub use error::CliError;
pub use experiment::{builtin_tiny, run_experiment, ExperimentOutcome};
pub use replay::{replay_check, ReplayOutcome};
