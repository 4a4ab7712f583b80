//! Benchmark harness behind the `elweno` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{RawConfig, RunConfig};
pub use error::CliError;
