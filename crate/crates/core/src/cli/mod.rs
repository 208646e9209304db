//! Batch experiment runner behind the `regcon` binary.

pub mod config;
pub mod demo;
pub mod export;
pub mod runner;

pub use config::{Command, ExperimentConfig, Job, SCHEMA};
pub use demo::DemoName;
pub use runner::{run_experiment, write_diagnostic, RunArtifact, RunError, RunOptions, RunStatus};
