//! Configuration, orchestration and artifact output for the `igac` tool.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use config::{ConfigError, ExperimentConfig, Format};
pub use error::CliError;
pub use run::{run_experiment, run_selected, Analyses, RunOptions, RunOutcome};
