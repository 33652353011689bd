//! Experiment configuration, closed-loop runs and the unit-sweep matrix.

mod check;
mod config;
mod matrix;
mod run;

pub use check::{invariant_suite, CheckResult};
pub use config::{presets, ExperimentConfig, MatrixFile, NoiseSpec, Resolved, Sweep};
pub use matrix::{
    consistency_text, run_matrix, series_deviation, summary_csv, verdict, write_report,
    write_run_csv, CellKey, MatrixReport, Verdict, CONSISTENCY_ATOL_MM, CONSISTENCY_RTOL,
};
pub use run::{run, run_unit, ExperimentRecord, RunStatus, WaypointRecord, DIVERGENCE_MM};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
