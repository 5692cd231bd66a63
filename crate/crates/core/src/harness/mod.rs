//! Closed-loop trial orchestration, experiment grids and reporting.

mod config;
mod experiment;
pub mod record;
mod report;
pub mod setup;
mod stats;
mod trial;

pub use config::{Condition, SimConfig, TrialConfig};
pub use experiment::{run_experiment, CellSummary, ExperimentSpec, ExperimentSummary, TrialRow};
pub use report::{render_report, series_csv, ReportFormat};
pub use stats::{pearson, CorrelationError};
pub use trial::{
    run_trial, run_trial_observed, NoObserver, TickOutput, TraceRecord, TrialObserver, TrialResult,
    TrialRunner, TrialSeries,
};

use crate::emg::EmgError;
use crate::haptic::HapticError;
use crate::sim::SimError;
use crate::tactile::TactileError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown object '{0}'")]
    UnknownObject(String),
    #[error("unknown report format '{0}' (expected table, json or csv)")]
    UnknownFormat(String),
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Tactile(#[from] TactileError),
    #[error(transparent)]
    Haptic(#[from] HapticError),
    #[error(transparent)]
    Emg(#[from] EmgError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Configuration problems are the caller's to fix; everything else is a
    /// failure while running.
    pub fn is_config(&self) -> bool {
        match self {
            HarnessError::Config(_)
            | HarnessError::UnknownObject(_)
            | HarnessError::UnknownFormat(_) => true,
            HarnessError::Sim(e) => !matches!(e, SimError::Io(_) | SimError::Json(_)),
            _ => false,
        }
    }
}
