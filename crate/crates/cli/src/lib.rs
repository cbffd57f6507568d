//! Experiment runner: TOML configs in, CSV traces and JSON checkpoints out.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;
pub mod trace;

pub use commands::{run, Command, Invocation};
pub use config::ExperimentConfig;
pub use error::{CliError, Result};
