use serde::{Deserialize, Serialize};

use crate::descent::{for_each_subset, FlipSet, NeighborhoodEvaluator, MAX_FLIP_ORDER};
use crate::quantum::{cost_from_fidelity, FidelityEngine, Protocol};

use super::{DosHistogram, StatsError};

/// A flip set applied to a reference protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationRecord {
    pub flips: Vec<usize>,
    /// `Σ_{j∈flips} (σ_j - σ*_j) = -2 Σ σ*_j` in normalized units; multiply
    /// by `h_max` for field units.
    pub magnetization: i32,
    pub cost: f64,
    pub delta_cost: f64,
}

/// Every flip set of the requested orders applied to `reference`, ordered
/// by order then lexicographically.
pub fn excitations(
    engine: &FidelityEngine,
    reference: &Protocol,
    orders: &[usize],
) -> Result<Vec<ExcitationRecord>, StatsError> {
    let n = reference.len();
    if n != engine.bangs() {
        return Err(StatsError::LengthMismatch(engine.bangs(), n));
    }
    if let Some(&bad) = orders.iter().find(|&&k| k > n || k > MAX_FLIP_ORDER) {
        return Err(StatsError::InvalidArgument(format!(
            "flip order {bad} not available for {n} bangs"
        )));
    }
    let sites = engine.problem().sites;
    let mut ev = NeighborhoodEvaluator::new(engine, reference);
    let base = cost_from_fidelity(ev.fidelity(), sites).value;
    let signs = reference.bangs();
    let mut out = Vec::new();
    for &k in orders {
        if k == 0 {
            out.push(ExcitationRecord {
                flips: Vec::new(),
                magnetization: 0,
                cost: base,
                delta_cost: 0.0,
            });
            continue;
        }
        for_each_subset(n, k, |idx| {
            let set = FlipSet::new(idx).expect("valid subset");
            let cost = cost_from_fidelity(ev.fidelity_with_flips(&set), sites).value;
            out.push(ExcitationRecord {
                flips: idx.to_vec(),
                magnetization: -2 * idx.iter().map(|&j| signs[j] as i32).sum::<i32>(),
                cost,
                delta_cost: cost - base,
            });
        });
    }
    Ok(out)
}

/// Mean of `DOS(cost) / max DOS` over the given costs: how much of the
/// excitation weight sits where the landscape is dense.
pub fn mean_relative_dos(dos: &DosHistogram, costs: &[f64]) -> f64 {
    let peak = dos.histogram.max_density();
    if costs.is_empty() || peak == 0.0 {
        return 0.0;
    }
    costs
        .iter()
        .map(|&c| dos.histogram.density_at(c))
        .sum::<f64>()
        / (costs.len() as f64 * peak)
}
