//! Config-driven experiment runner for `seqlab-core`.
//!
//! A config is one JSON object naming an experiment and its inputs; a run
//! produces a [`runner::RunReport`] whose pass/fail drives the exit code.

pub mod config;
pub mod runner;

pub use config::{load_config, parse_config, ConfigError, Experiment, ExperimentConfig, Format};
pub use runner::{run_config, run_suite, write_atomic, RunError, RunReport, SuiteReport};
