//! Experiment harness for the zeroth-order optimizers: multi-seed runs with
//! aggregate curves and plots, grid search, and the statistical check suites.

pub mod config;
pub mod error;
pub mod experiment;
pub mod grid;
pub mod plot;
pub mod suites;

pub use config::{GridSpec, MethodConfig, ParamMode, RunConfig};
pub use error::BenchError;
pub use experiment::{execute, run_experiment, AggregateCurve, ExperimentResult, MethodSummary, SeedRun};
pub use grid::{grid_search, run_grid, GridCell};
pub use suites::{run_suites, CheckResult, Suite, SuiteOptions};
