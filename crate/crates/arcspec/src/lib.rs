//! CLI harness for arcspec-core: configuration parsing, parallel execution,
//! and deterministic report emission.

pub mod config;
pub mod error;
pub mod parallel;
pub mod report;
pub mod runner;

pub use config::{parse_config, ExperimentConfig};
pub use error::AppError;
pub use runner::{run, Subcommand};
