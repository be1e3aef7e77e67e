//! Config-driven sweeps: parse a TOML experiment, run every grid point into
//! its own directory, and emit tidy CSV tables for plotting.

mod config;
mod emit;
mod runner;

pub use config::{
    AnalysisBlock, ComplexityOptions, DosOptions, Durations, EmbeddingOptions, ExperimentConfig,
    FitOptions, HammingOptions, Limits, ProblemBlock, SweepBlock,
};
pub use emit::{emit_all, emit_plot_data, PlotKind};
pub use runner::{run_experiment, CellRecord, CellStatus, FileEntry, Manifest, RunOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error("no results for {kind}; enable `{toggle}` and rerun")]
    MissingResults {
        kind: &'static str,
        toggle: &'static str,
    },
    #[error("unknown plot kind `{0}`")]
    UnknownKind(String),
    #[error("all {0} grid points failed")]
    AllCellsFailed(usize),
    #[error("{0}")]
    Serialization(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ExperimentError {
    /// Whether the failure is the config's fault rather than the run's.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            ExperimentError::Parse(_)
                | ExperimentError::Invalid(_)
                | ExperimentError::UnknownKind(_)
        )
    }
}

pub(crate) fn ser<E: std::fmt::Display>(e: E) -> ExperimentError {
    ExperimentError::Serialization(e.to_string())
}
