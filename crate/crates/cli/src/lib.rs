//! Batch experiment driver for `limitlab`.
//!
//! Each subcommand loads a model file, runs one experiment and writes a
//! deterministic JSON or CSV report. Exit codes: `0` when every certified
//! claim holds, `2` when something stays undetermined, `1` on a violated bound
//! or an input error.

pub mod commands;
pub mod config;
pub mod lint;
pub mod report;

pub use commands::{Outcome, Run};
pub use config::{ExperimentConfig, Format, ModelFile};
