//! Experiment harness for `distlingape-core`: TOML configs, seeded
//! parallel repetitions, sweeps, and CSV/JSON output.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod harness;
pub mod output;

pub use config::{Algorithm, AxisValue, ConfigError, ExperimentConfig, Scenario, SweepSpec};
pub use harness::{run_experiment, sweep, Experiment, HarnessError, Instance, MetricsRecord, RunRecord};
