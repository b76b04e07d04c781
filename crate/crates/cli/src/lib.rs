//! Command-line front end for the `ranger` simulator: configuration
//! parsing, the `run` / `fig4` / `sweep` pipelines and artifact writers.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{cmd_fig4, cmd_run, cmd_sweep, execute, Context};
pub use config::ExperimentConfig;
pub use error::CliError;
