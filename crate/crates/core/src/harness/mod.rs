//! Experiment harness: configuration, loss streams, comparator, runner and
//! CSV output.

pub mod comparator;
pub mod config;
pub mod experiment;
pub mod loss;
pub mod output;

pub use config::{Algorithm, ExperimentConfig, Prepared};
pub use experiment::{run_experiment, RegretTrace, TraceRow};
