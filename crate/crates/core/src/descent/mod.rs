//! Stochastic descent over bang-bang protocols, exhaustive enumeration and
//! complexity estimates.

mod brute_force;
mod complexity;
mod evaluator;
mod sampler;
mod updates;

pub use brute_force::{
    brute_force_optimum, enumerate_landscape, Enumeration, EnumerationOptions,
    DEFAULT_ENUMERATION_CAP,
};
pub use complexity::{
    complexity, complexity_from_runs, ComplexityEstimate, OPTIMUM_COST_TOLERANCE,
};
pub use evaluator::NeighborhoodEvaluator;
pub use sampler::{
    certify_local_minimum, improves, sample, sample_with_engine, sd_run, sd_run_traced,
    LocalMinimum, SampleSet, IMPROVEMENT_TOLERANCE,
};
pub use updates::{
    binomial, enumerate_updates, for_each_subset, update_count, FlipSet, MAX_FLIP_ORDER,
};

use thiserror::Error;

use crate::quantum::QuantumError;

#[derive(Debug, Error)]
pub enum DescentError {
    #[error("flip order {k} is outside 1..={bangs}")]
    InvalidFlipOrder { k: usize, bangs: usize },
    #[error("flip order {k} exceeds the supported maximum {max}")]
    FlipOrderTooLarge { k: usize, max: usize },
    #[error("enumerating 2^{bangs} protocols exceeds the configured cap of 2^{cap}")]
    EnumerationTooLarge { bangs: usize, cap: usize },
    #[error("{0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serialization(String),
}
