//! Command-line front end for `prodent`: run entropy experiments and the
//! verification suites, and write CSV and JSON reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod estimate;
pub mod report;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
pub use estimate::run_estimate;
pub use report::Report;
pub use verify::run_verify;
