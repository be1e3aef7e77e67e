use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::descent::{LocalMinimum, SampleSet};
use crate::quantum::Protocol;

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderParameters {
    pub q: f64,
    pub f: f64,
    pub m: usize,
    pub m_star: usize,
    /// Records were kept only if their fidelity reached this fraction of
    /// the best sampled fidelity.
    pub fidelity_filter: Option<f64>,
}

fn check_lengths(protocols: &[Protocol]) -> Result<usize, StatsError> {
    let first = protocols.first().ok_or(StatsError::Empty)?.len();
    if let Some(p) = protocols.iter().find(|p| p.len() != first) {
        return Err(StatsError::LengthMismatch(first, p.len()));
    }
    Ok(first)
}

/// `q = (1/N) Σ_j (1 - σ̄_j²)`, the per-bang population variance of the
/// normalized bangs averaged over the protocol.
pub fn correlator_q(protocols: &[Protocol]) -> Result<f64, StatsError> {
    let n = check_lengths(protocols)?;
    if n == 0 {
        return Ok(0.0);
    }
    let m = protocols.len() as f64;
    let mut sums = vec![0i64; n];
    for p in protocols {
        for (s, &b) in sums.iter_mut().zip(p.bangs()) {
            *s += b as i64;
        }
    }
    let q = sums
        .iter()
        .map(|&s| {
            let mean = s as f64 / m;
            1.0 - mean * mean
        })
        .sum::<f64>()
        / n as f64;
    Ok(q.clamp(0.0, 1.0))
}

/// The same correlator from physical field values `h_j = ±h_max`:
/// `(1/(h_max² N)) Σ_j mean_α (h_j^α - h̄_j)²`. With `h_max = 4` this is the
/// `1/16` normalization.
pub fn correlator_q_fields(fields: &[Vec<f64>], field_max: f64) -> Result<f64, StatsError> {
    let first = fields.first().ok_or(StatsError::Empty)?;
    let n = first.len();
    if let Some(f) = fields.iter().find(|f| f.len() != n) {
        return Err(StatsError::LengthMismatch(n, f.len()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let m = fields.len() as f64;
    let mut total = 0.0;
    for j in 0..n {
        let mean = fields.iter().map(|f| f[j]).sum::<f64>() / m;
        total += fields.iter().map(|f| (f[j] - mean).powi(2)).sum::<f64>() / m;
    }
    Ok(total / (field_max * field_max * n as f64))
}

/// `M* / M` over exact bit sequences.
pub fn distinct_fraction(protocols: &[Protocol]) -> Result<f64, StatsError> {
    if protocols.is_empty() {
        return Err(StatsError::Empty);
    }
    let distinct: HashSet<&Protocol> = protocols.iter().collect();
    Ok(distinct.len() as f64 / protocols.len() as f64)
}

/// Records whose fidelity is at least `fraction` of the best one.
pub fn filter_by_fidelity(records: &[LocalMinimum], fraction: f64) -> Vec<&LocalMinimum> {
    let best = records
        .iter()
        .map(|r| r.fidelity)
        .fold(f64::NEG_INFINITY, f64::max);
    records
        .iter()
        .filter(|r| r.fidelity >= fraction * best)
        .collect()
}

pub fn order_parameters(
    sample: &SampleSet,
    fidelity_filter: Option<f64>,
) -> Result<OrderParameters, StatsError> {
    let kept: Vec<Protocol> = match fidelity_filter {
        Some(frac) => filter_by_fidelity(&sample.records, frac)
            .into_iter()
            .map(|r| r.protocol.clone())
            .collect(),
        None => sample.protocols(),
    };
    let q = correlator_q(&kept)?;
    let m_star = kept.iter().collect::<HashSet<_>>().len();
    Ok(OrderParameters {
        q,
        f: m_star as f64 / kept.len() as f64,
        m: kept.len(),
        m_star,
        fidelity_filter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_protocols_have_zero_q() {
        let p = Protocol::from_signs(vec![1, -1, 1, 1]).unwrap();
        assert_eq!(correlator_q(&vec![p.clone(); 5]).unwrap(), 0.0);
        assert_eq!(distinct_fraction(&vec![p; 5]).unwrap(), 0.2);
    }

    #[test]
    fn opposite_protocols_have_unit_q() {
        let ps = vec![Protocol::constant(6, 1), Protocol::constant(6, -1)];
        assert_eq!(correlator_q(&ps).unwrap(), 1.0);
        let fields: Vec<_> = ps.iter().map(|p| p.fields(4.0)).collect();
        assert_eq!(correlator_q_fields(&fields, 4.0).unwrap(), 1.0);
    }

    #[test]
    fn both_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ps: Vec<_> = (0..37).map(|_| Protocol::random(23, &mut rng)).collect();
        let fields: Vec<_> = ps.iter().map(|p| p.fields(4.0)).collect();
        let a = correlator_q(&ps).unwrap();
        let b = correlator_q_fields(&fields, 4.0).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(correlator_q(&[]), Err(StatsError::Empty));
    }
}
