//! Experiment harness for the `ldhoo` crate: bandit regret and complexity
//! sweeps, planned control episodes, single-action planning timings, and
//! aggregation of the resulting CSV files.

pub mod config;
pub mod error;
pub mod experiment;
pub mod suite;
pub mod summary;

pub use error::{BenchError, Result};
pub use experiment::{ExperimentKind, ExperimentRecord, ExperimentSpec};
