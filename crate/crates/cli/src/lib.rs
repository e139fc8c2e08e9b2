//! Command-line harness: train, compare, sample and inspect interface-problem
//! solvers with reproducible artifacts.

pub mod cli;
pub mod commands;
pub mod config;
pub mod presets;

/// A malformed invocation; reported with exit status 2.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);
