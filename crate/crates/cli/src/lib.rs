//! Experiment runner for `levy-core`: JSON configs, scenario outputs and the
//! acceptance suite behind `levy selftest`.

pub mod config;
pub mod criteria;
pub mod fixtures;
pub mod scenarios;

pub use config::{Config, ConfigError, Overrides, Workspace};
