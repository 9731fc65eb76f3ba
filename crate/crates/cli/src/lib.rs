//! Configuration parsing and subcommand execution for the `levyfield` binary.

pub mod config;
pub mod error;
pub mod run;

pub use config::{parse_config, RunConfig, SCHEMA};
pub use error::CliError;
pub use run::{run, run_file, Outcome, Overrides, Subcommand};
