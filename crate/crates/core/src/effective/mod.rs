//! Multilinear (Walsh) expansion of the cost landscape over `σ ∈ {±1}^N`
//! and regression fits of low-order spin models.

mod couplings;
mod regression;
mod walsh;

pub use couplings::{si_formula_couplings, CouplingTable, SiCouplings};
pub use regression::{
    fit_low_manifold, lambda_grid, low_manifold, r_squared, select_lambda, select_lambda_within,
    FeatureSet, FitResult, RSquaredMean, Regularizer, LASSO_MAX_SWEEPS, LASSO_TOLERANCE,
};
pub use walsh::{fwht, walsh_coefficients};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectiveError {
    #[error("table length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("order {order} is not available (table holds orders up to {max})")]
    OrderUnavailable { order: usize, max: usize },
    #[error("all retained couplings vanish; frustration is undefined")]
    ZeroCouplings,
    #[error("the constant term cannot enter the frustration parameter")]
    ConstantOrder,
    #[error("true values have zero variance")]
    ZeroVariance,
    #[error("{0}")]
    InvalidArgument(String),
    #[error("linear solve failed: {0}")]
    Singular(String),
}
