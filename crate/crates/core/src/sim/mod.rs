//! Scenarios, the synchronous world loop, metrics and output artifacts.
//!
//! A step moves the targets, lets every radar run its five phases against
//! the messages delivered at the end of the previous step, then delivers
//! the new messages along the communication edges.

mod compare;
mod output;
mod scenario;
mod svg;
mod world;

use thiserror::Error;

pub use compare::{compare_centralized, compare_now, run_static, run_static_batch, ComparisonRow, StaticReport};
pub use output::{run_to_dir, write_comparison_csv, write_metrics_csv, write_trace, RunOptions, RunSummary};
pub use scenario::{
    generate_scenario, GeneratorSpec, Motion, Scenario, TargetSpec, Topology, DEFAULT_ARENA, DEFAULT_RANGE,
    SPEED_RANGE,
};
pub use svg::Snapshot;
pub use world::{Claims, MovingTarget, RunResult, Simulation, StepMetrics};

use crate::cbba::CbbaError;
use crate::oracle::OracleError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Cbba(#[from] CbbaError),
    #[error("oracle failed at step {step}: {source}")]
    Oracle { step: u64, source: OracleError },
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
