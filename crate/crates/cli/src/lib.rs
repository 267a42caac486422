//! Experiment driver behind the `wavelab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod plot;
pub mod runner;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use runner::{execute, run, Report};
