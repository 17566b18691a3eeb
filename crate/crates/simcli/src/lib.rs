//! Experiment orchestration for fedsim: configuration, runs, comparison grids,
//! metrics CSV output, and the `fedsim` command line.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod compare;
pub mod config;
mod error;
pub mod experiment;
pub mod metrics;

pub use compare::{run_comparison, ComparisonCell, ComparisonTable};
pub use config::{Algorithm, ExperimentConfig};
pub use error::{SimError, SimResult};
pub use experiment::{prepare, run_experiment, run_prepared, ExperimentOutput, Prepared, Summary};
pub use metrics::{emit_metrics_csv, parse_metrics_csv, MetricsRow};
