//! Order parameters, distances, histograms and excitation spectra over
//! samples of protocols.

mod distance;
mod excitations;
mod histogram;
mod order;

pub use distance::{hamming_matrix, DistanceMatrix};
pub use excitations::{excitations, mean_relative_dos, ExcitationRecord};
pub use histogram::{
    bimodality, dos, find_peaks, pairwise_histogram, Bimodality, DosHistogram, DosOrigin, Histogram,
};
pub use order::{
    correlator_q, correlator_q_fields, distinct_fraction, filter_by_fidelity, order_parameters,
    OrderParameters,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no protocols left to analyze")]
    Empty,
    #[error("protocols have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("{0}")]
    InvalidArgument(String),
}
