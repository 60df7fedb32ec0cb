//! Batch front-end of the `gainloss` toolkit: CSV ingestion, one pipeline per
//! subcommand, JSON reports and plot-ready CSV tables. Every output carries the
//! configuration that produced it.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{rerun, run, RunOutput, VERSION};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
