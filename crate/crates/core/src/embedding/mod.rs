//! Two-dimensional t-SNE maps of sampled protocols and density-peak
//! clustering of the map.

mod affinity;
mod cluster;
mod tsne;

pub use affinity::{perplexity_calibration, Calibration, BISECTION_STEPS, ENTROPY_TOLERANCE};
pub use cluster::{
    density_peak_cluster, mean_intercluster_distance, CenterSelection, ClusterAssignment,
    ClusterDistances, ClusterOptions,
};
pub use tsne::{tsne, tsne_protocols, EmbeddingConfig, EmbeddingResult};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EmbeddingError {
    #[error("perplexity {perplexity} must lie strictly between 1 and {max} for {points} points")]
    Perplexity {
        perplexity: f64,
        points: usize,
        max: f64,
    },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
}
