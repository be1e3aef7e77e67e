use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quantum::{cost_from_fidelity, ControlProblem, FidelityEngine, Protocol};
use crate::seeds::derive_seed;

use super::{enumerate_updates, DescentError, FlipSet, NeighborhoodEvaluator};

/// Relative margin a candidate fidelity must exceed the current one by to
/// count as an improvement. Protects against cycling between protocols whose
/// fidelities agree up to roundoff.
pub const IMPROVEMENT_TOLERANCE: f64 = 1e-12;

/// Whether `candidate` strictly improves on `current`.
#[inline]
pub fn improves(candidate: f64, current: f64) -> bool {
    candidate - current > IMPROVEMENT_TOLERANCE * current.abs().max(f64::MIN_POSITIVE)
}

/// Result of one stochastic descent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimum {
    pub protocol: Protocol,
    pub fidelity: f64,
    pub cost: f64,
    /// Fidelity evaluations consumed, counting the starting protocol.
    pub n_eval: u64,
    pub k: usize,
    pub seed: u64,
    pub accepted_moves: u64,
    /// Updates examined in the final sweep that found no improvement.
    pub final_sweep_evals: u64,
}

fn effective_order(problem: &ControlProblem, k: usize) -> Result<usize, DescentError> {
    if problem.bangs == 0 {
        return Err(DescentError::InvalidArgument(
            "stochastic descent needs at least one bang".into(),
        ));
    }
    if k == 0 {
        return Err(DescentError::InvalidFlipOrder {
            k,
            bangs: problem.bangs,
        });
    }
    Ok(k.min(problem.bangs))
}

/// One SD_k run from a uniformly random protocol.
///
/// `k` larger than the protocol length is treated as the full length.
pub fn sd_run(engine: &FidelityEngine, k: usize, seed: u64) -> Result<LocalMinimum, DescentError> {
    let k_eff = effective_order(engine.problem(), k)?;
    let updates = enumerate_updates(engine.bangs(), k_eff)?;
    Ok(descend(engine, &updates, k, seed, None))
}

/// As [`sd_run`], also returning the fidelity after every accepted move
/// (starting with the initial protocol).
pub fn sd_run_traced(
    engine: &FidelityEngine,
    k: usize,
    seed: u64,
) -> Result<(LocalMinimum, Vec<f64>), DescentError> {
    let k_eff = effective_order(engine.problem(), k)?;
    let updates = enumerate_updates(engine.bangs(), k_eff)?;
    let mut trace = Vec::new();
    let run = descend(engine, &updates, k, seed, Some(&mut trace));
    Ok((run, trace))
}

fn descend(
    engine: &FidelityEngine,
    updates: &[FlipSet],
    k: usize,
    seed: u64,
    mut trace: Option<&mut Vec<f64>>,
) -> LocalMinimum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = Protocol::random(engine.bangs(), &mut rng);
    let mut ev = NeighborhoodEvaluator::new(engine, &start);
    let mut order: Vec<u32> = (0..updates.len() as u32).collect();
    let mut n_eval: u64 = 1;
    let mut accepted: u64 = 0;
    if let Some(t) = trace.as_deref_mut() {
        t.push(ev.fidelity());
    }

    let final_sweep = 'sweeps: loop {
        // Fisher-Yates drawn lazily: each prefix of the sweep is a uniform
        // random ordering, so stopping early costs nothing extra.
        let len = order.len();
        for i in 0..len {
            let r = rng.random_range(i..len);
            order.swap(i, r);
            let u = &updates[order[i] as usize];
            let f = ev.fidelity_with_flips(u);
            n_eval += 1;
            if improves(f, ev.fidelity()) {
                ev.accept(u);
                accepted += 1;
                if let Some(t) = trace.as_deref_mut() {
                    t.push(ev.fidelity());
                }
                continue 'sweeps;
            }
        }
        break len as u64;
    };

    let fidelity = ev.fidelity();
    LocalMinimum {
        protocol: ev.protocol(),
        fidelity,
        cost: cost_from_fidelity(fidelity, engine.problem().sites).value,
        n_eval,
        k,
        seed,
        accepted_moves: accepted,
        final_sweep_evals: final_sweep,
    }
}

/// True iff no update of at most `k` flips strictly improves the fidelity
/// of `protocol`, using the same acceptance rule as [`sd_run`].
pub fn certify_local_minimum(
    engine: &FidelityEngine,
    protocol: &Protocol,
    k: usize,
) -> Result<bool, DescentError> {
    if protocol.len() != engine.bangs() {
        return Err(crate::quantum::QuantumError::ProtocolLength {
            expected: engine.bangs(),
            found: protocol.len(),
        }
        .into());
    }
    let k_eff = effective_order(engine.problem(), k)?;
    let mut ev = NeighborhoodEvaluator::new(engine, protocol);
    let current = ev.fidelity();
    for u in enumerate_updates(engine.bangs(), k_eff)? {
        if improves(ev.fidelity_with_flips(&u), current) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `M` independent SD_k minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub problem: ControlProblem,
    pub k: usize,
    pub master_seed: u64,
    pub records: Vec<LocalMinimum>,
}

impl SampleSet {
    pub fn m(&self) -> usize {
        self.records.len()
    }

    /// Number of distinct protocols among the records.
    pub fn m_star(&self) -> usize {
        self.records
            .iter()
            .map(|r| &r.protocol)
            .collect::<HashSet<_>>()
            .len()
    }

    /// `M* / M`.
    pub fn distinct_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.m_star() as f64 / self.m() as f64
    }

    pub fn protocols(&self) -> Vec<Protocol> {
        self.records.iter().map(|r| r.protocol.clone()).collect()
    }

    pub fn best(&self) -> Option<&LocalMinimum> {
        self.records
            .iter()
            .max_by(|a, b| a.fidelity.total_cmp(&b.fidelity))
    }

    pub fn mean_n_eval(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().map(|r| r.n_eval as f64).sum::<f64>() / self.m() as f64
    }

    pub fn total_n_eval(&self) -> u64 {
        self.records.iter().map(|r| r.n_eval).sum()
    }

    pub fn to_json(&self) -> Result<String, DescentError> {
        serde_json::to_string_pretty(self).map_err(|e| DescentError::Serialization(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, DescentError> {
        serde_json::from_str(text).map_err(|e| DescentError::Serialization(e.to_string()))
    }

    pub fn save_json(&self, path: &Path) -> Result<(), DescentError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, DescentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// One row per record: protocol string, fidelity, cost and counters.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), DescentError> {
        let mut w = csv::Writer::from_writer(out);
        let ser = |e: csv::Error| DescentError::Serialization(e.to_string());
        w.write_record([
            "run",
            "seed",
            "protocol",
            "fidelity",
            "cost",
            "n_eval",
            "accepted_moves",
        ])
        .map_err(ser)?;
        for (i, r) in self.records.iter().enumerate() {
            w.write_record([
                i.to_string(),
                r.seed.to_string(),
                r.protocol.to_string(),
                format!("{:.17e}", r.fidelity),
                format!("{:.17e}", r.cost),
                r.n_eval.to_string(),
                r.accepted_moves.to_string(),
            ])
            .map_err(ser)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `m` SD_k minima; run `i` uses seed `derive_seed(master_seed, "sd", i)`.
pub fn sample(
    problem: &ControlProblem,
    k: usize,
    m: usize,
    master_seed: u64,
) -> Result<SampleSet, DescentError> {
    let engine = FidelityEngine::new(problem)?;
    sample_with_engine(&engine, k, m, master_seed)
}

pub fn sample_with_engine(
    engine: &FidelityEngine,
    k: usize,
    m: usize,
    master_seed: u64,
) -> Result<SampleSet, DescentError> {
    if m == 0 {
        return Err(DescentError::InvalidArgument(
            "sample count must be at least 1".into(),
        ));
    }
    let k_eff = effective_order(engine.problem(), k)?;
    let updates = enumerate_updates(engine.bangs(), k_eff)?;
    let records = (0..m as u64)
        .into_par_iter()
        .map(|i| descend(engine, &updates, k, derive_seed(master_seed, "sd", i), None))
        .collect();
    Ok(SampleSet {
        problem: engine.problem().clone(),
        k,
        master_seed,
        records,
    })
}
