use rayon::prelude::*;

use crate::quantum::{cost_from_fidelity, sector, Amps, FidelityEngine, Protocol};

use super::DescentError;

/// Largest protocol length enumerated unless the caller raises the cap.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Number of leading bangs split across worker tasks.
const SPLIT_BANGS: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    pub cap: usize,
    /// Keep the fidelity of every protocol.
    pub keep_table: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            cap: DEFAULT_ENUMERATION_CAP,
            keep_table: false,
        }
    }
}

/// Exhaustive scan of all `2^N` protocols.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub bangs: usize,
    pub sites: usize,
    pub best_index: u64,
    pub best_protocol: Protocol,
    pub best_fidelity: f64,
    pub best_cost: f64,
    /// Fidelities indexed as in [`Protocol::from_index`], when requested.
    pub fidelities: Option<Vec<f64>>,
}

impl Enumeration {
    /// Cost of every protocol, in table order.
    pub fn costs(&self) -> Option<Vec<f64>> {
        self.fidelities.as_ref().map(|fs| {
            fs.iter()
                .map(|&f| cost_from_fidelity(f, self.sites).value)
                .collect()
        })
    }
}

/// Global optimum by enumeration with the default cap, without the table.
pub fn brute_force_optimum(engine: &FidelityEngine) -> Result<Enumeration, DescentError> {
    enumerate_landscape(engine, EnumerationOptions::default())
}

/// Depth-first enumeration sharing propagated prefixes, `O(2^N)` steps.
pub fn enumerate_landscape(
    engine: &FidelityEngine,
    options: EnumerationOptions,
) -> Result<Enumeration, DescentError> {
    let n = engine.bangs();
    if n > options.cap || n >= 63 {
        return Err(DescentError::EnumerationTooLarge {
            bangs: n,
            cap: options.cap.min(62),
        });
    }
    let sites = engine.problem().sites;

    if n == 0 {
        let f = engine.fidelity(&Protocol::constant(0, 1))?;
        return Ok(Enumeration {
            bangs: 0,
            sites,
            best_index: 0,
            best_protocol: Protocol::constant(0, 1),
            best_fidelity: f,
            best_cost: cost_from_fidelity(f, sites).value,
            fidelities: options.keep_table.then(|| vec![f]),
        });
    }

    let split = n.min(SPLIT_BANGS);
    let tail = n - split;
    let chunks: Vec<(u64, f64, Option<Vec<f64>>)> = (0..1u64 << split)
        .into_par_iter()
        .map(|head| {
            let mut walker = Walker::new(engine, n);
            let mut table = options.keep_table.then(|| vec![0.0; 1usize << tail]);
            // propagate the fixed head
            let signs: Vec<i8> = (0..split)
                .map(|j| if (head >> j) & 1 == 1 { -1 } else { 1 })
                .collect();
            for (j, &s) in signs.iter().enumerate() {
                walker.push(j, sector(s));
            }
            let mut best = (0u64, f64::NEG_INFINITY);
            walker.descend(split, head, &mut best, table.as_deref_mut(), split);
            (best.0, best.1, table)
        })
        .collect();

    let mut best_index = 0;
    let mut best_fidelity = f64::NEG_INFINITY;
    for &(idx, f, _) in &chunks {
        if f > best_fidelity {
            best_fidelity = f;
            best_index = idx;
        }
    }
    let fidelities = options.keep_table.then(|| {
        let mut all = vec![0.0; 1usize << n];
        for (head, (_, _, t)) in chunks.iter().enumerate() {
            let t = t.as_ref().expect("table requested");
            for (rest, &f) in t.iter().enumerate() {
                all[head | (rest << split)] = f;
            }
        }
        all
    });
    Ok(Enumeration {
        bangs: n,
        sites,
        best_index,
        best_protocol: Protocol::from_index(n, best_index),
        best_fidelity,
        best_cost: cost_from_fidelity(best_fidelity, sites).value,
        fidelities,
    })
}

/// Per-depth state buffers for the depth-first walk.
struct Walker<'a> {
    engine: &'a FidelityEngine,
    n: usize,
    states: Vec<Amps>,
    bases: Vec<usize>,
    scratch: Amps,
}

impl<'a> Walker<'a> {
    fn new(engine: &'a FidelityEngine, n: usize) -> Self {
        let dim = engine.working_dimension();
        Walker {
            engine,
            n,
            states: vec![Amps::zeros(dim); n],
            bases: vec![0; n],
            scratch: Amps::zeros(dim),
        }
    }

    /// Fills depth `j` by applying a bang of sector `s` to depth `j - 1`.
    fn push(&mut self, j: usize, s: usize) {
        let engine = self.engine;
        let (done, rest) = self.states.split_at_mut(j);
        let cur = &mut rest[0];
        let basis = if j == 0 {
            cur.copy_from(engine.initial_in(s));
            s
        } else {
            cur.copy_from(&done[j - 1]);
            self.bases[j - 1]
        };
        if basis != s {
            engine.rotate(cur, s, &mut self.scratch);
            std::mem::swap(cur, &mut self.scratch);
        }
        engine.apply_phase(cur, s);
        self.bases[j] = s;
    }

    fn descend(
        &mut self,
        j: usize,
        index: u64,
        best: &mut (u64, f64),
        mut table: Option<&mut [f64]>,
        split: usize,
    ) {
        if j == self.n {
            let last = self.n - 1;
            let f = self
                .engine
                .target_overlap(&self.states[last], self.bases[last])
                .norm_sqr();
            if f > best.1 {
                *best = (index, f);
            }
            if let Some(t) = table {
                t[(index >> split) as usize] = f;
            }
            return;
        }
        for (bit, s) in [(0u64, 1usize), (1, 0)] {
            self.push(j, s);
            self.descend(j + 1, index | (bit << j), best, table.as_deref_mut(), split);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::ControlProblem;

    #[test]
    fn single_bang_is_best_of_two() {
        let engine = FidelityEngine::new(&ControlProblem::new(4, 0.7, 1)).unwrap();
        let e = brute_force_optimum(&engine).unwrap();
        let fp = engine.fidelity(&Protocol::constant(1, 1)).unwrap();
        let fm = engine.fidelity(&Protocol::constant(1, -1)).unwrap();
        assert_eq!(e.best_fidelity, fp.max(fm));
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let engine = FidelityEngine::new(&ControlProblem::new(3, 1.3, 7)).unwrap();
        let e = enumerate_landscape(
            &engine,
            EnumerationOptions {
                keep_table: true,
                ..Default::default()
            },
        )
        .unwrap();
        let table = e.fidelities.as_ref().unwrap();
        assert_eq!(table.len(), 128);
        for (i, &f) in table.iter().enumerate() {
            let direct = engine.fidelity(&Protocol::from_index(7, i as u64)).unwrap();
            assert!((f - direct).abs() < 1e-12);
        }
        let max = table.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(e.best_fidelity, max);
        assert_eq!(table[e.best_index as usize], max);
    }

    #[test]
    fn cap_is_enforced() {
        let engine = FidelityEngine::new(&ControlProblem::new(2, 1.0, 10)).unwrap();
        let r = enumerate_landscape(
            &engine,
            EnumerationOptions {
                cap: 8,
                keep_table: false,
            },
        );
        assert!(matches!(
            r,
            Err(DescentError::EnumerationTooLarge { bangs: 10, cap: 8 })
        ));
    }
}
