//! Neighborhood fidelity evaluation with cached partial products.
//!
//! For the current protocol the evaluator keeps
//! * `prefix[j]`: the state after steps `0..=j`, in the eigenbasis of `σ_j`;
//! * `suffix[j]`: the bra `⟨ψ_*| U_{N-1} ⋯ U_{j+1}`, in the eigenbasis of
//!   `σ_{j+1}` (unused for the last step, where the target bra is taken
//!   directly);
//! * `flip_bra[j]`: `suffix[j] · U_{-σ_j}`, expressed in the basis of the
//!   state just before step `j`.
//!
//! A single flip at `j` is then one inner product. A multi-flip set with
//! prefix `P` and last index `j` shares the propagated state of `P` with
//! every other set that has the same prefix; those states are kept in lazily
//! extended rows, so an exhaustive 2-flip sweep costs `O(N²)` steps rather
//! than `O(N³)`.

use std::collections::HashMap;

use crate::quantum::{sector, Amps, FidelityEngine, Protocol};

use super::FlipSet;

/// Memory budget for cached rows, in bytes.
const ROW_CACHE_BYTES: usize = 64 << 20;

struct Row {
    state: Amps,
    basis: usize,
    /// Step whose fidelity is produced next.
    next: usize,
    /// First step covered by `values`.
    start: usize,
    values: Vec<f64>,
}

pub struct NeighborhoodEvaluator<'a> {
    engine: &'a FidelityEngine,
    signs: Vec<i8>,
    prefix: Vec<Amps>,
    suffix: Vec<Amps>,
    flip_bra: Vec<Amps>,
    rows: HashMap<u128, Row>,
    row_limit: usize,
    fidelity: f64,
    scratch: Amps,
}

impl<'a> NeighborhoodEvaluator<'a> {
    pub fn new(engine: &'a FidelityEngine, protocol: &Protocol) -> Self {
        assert_eq!(
            protocol.len(),
            engine.bangs(),
            "protocol length must match the problem"
        );
        let n = protocol.len();
        let dim = engine.working_dimension();
        let row_limit = (ROW_CACHE_BYTES / (16 * dim + 8 * n.max(1))).max(64);
        let mut ev = NeighborhoodEvaluator {
            engine,
            signs: protocol.bangs().to_vec(),
            prefix: vec![Amps::zeros(dim); n],
            suffix: vec![Amps::zeros(dim); n],
            flip_bra: vec![Amps::zeros(dim); n],
            rows: HashMap::new(),
            row_limit,
            fidelity: 0.0,
            scratch: Amps::zeros(dim),
        };
        if n > 0 {
            ev.rebuild(0, n - 1);
        } else {
            ev.fidelity = engine.bare_fidelity();
        }
        ev
    }

    pub fn fidelity(&self) -> f64 {
        self.fidelity
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn protocol(&self) -> Protocol {
        Protocol::from_signs(self.signs.clone()).expect("signs stay ±1")
    }

    #[inline]
    fn sector_at(&self, j: usize) -> usize {
        sector(self.signs[j])
    }

    /// Basis of the state just before step `j`.
    #[inline]
    fn before_basis(&self, j: usize) -> usize {
        if j == 0 {
            1 - self.sector_at(0)
        } else {
            self.sector_at(j - 1)
        }
    }

    #[inline]
    fn before_state(&self, j: usize) -> &Amps {
        if j == 0 {
            self.engine.initial_in(self.before_basis(0))
        } else {
            &self.prefix[j - 1]
        }
    }

    /// Recomputes cached products after the bangs in `lo..=hi` changed.
    fn rebuild(&mut self, lo: usize, hi: usize) {
        let n = self.signs.len();
        let engine = self.engine;

        for j in lo..n {
            let s = sector(self.signs[j]);
            let (done, rest) = self.prefix.split_at_mut(j);
            let cur = &mut rest[0];
            let basis = if j == 0 {
                cur.copy_from(engine.initial_in(s));
                s
            } else {
                cur.copy_from(&done[j - 1]);
                sector(self.signs[j - 1])
            };
            if basis != s {
                engine.rotate(cur, s, &mut self.scratch);
                std::mem::swap(cur, &mut self.scratch);
            }
            engine.apply_phase(cur, s);
        }

        // suffix[j] depends on the bangs after j
        for j in (0..hi.min(n - 1)).rev() {
            let s = sector(self.signs[j + 1]);
            let (head, tail) = self.suffix.split_at_mut(j + 1);
            let cur = &mut head[j];
            if j + 1 == n - 1 {
                *cur = Amps::from_real(engine.target_in(s));
            } else {
                cur.copy_from(&tail[0]);
                if sector(self.signs[j + 2]) != s {
                    engine.rotate(cur, s, &mut self.scratch);
                    std::mem::swap(cur, &mut self.scratch);
                }
            }
            engine.apply_phase(cur, s);
        }

        for j in 0..=(hi + 1).min(n - 1) {
            let flipped = 1 - self.sector_at(j);
            let mut bra = if j == n - 1 {
                Amps::from_real(engine.target_in(flipped))
            } else {
                let mut b = self.suffix[j].clone();
                if self.sector_at(j + 1) != flipped {
                    engine.rotate(&b, flipped, &mut self.scratch);
                    std::mem::swap(&mut b, &mut self.scratch);
                }
                b
            };
            engine.apply_phase(&mut bra, flipped);
            let target_basis = self.before_basis(j);
            if target_basis != flipped {
                engine.rotate(&bra, target_basis, &mut self.scratch);
                std::mem::swap(&mut bra, &mut self.scratch);
            }
            self.flip_bra[j] = bra;
        }

        let last = self.sector_at(n - 1);
        self.fidelity = engine.target_overlap(&self.prefix[n - 1], last).norm_sqr();
        self.rows.clear();
    }

    /// Fidelity of the current protocol with the bangs in `flips` inverted.
    pub fn fidelity_with_flips(&mut self, flips: &FlipSet) -> f64 {
        match flips.len() {
            0 => self.fidelity,
            1 => {
                let j = flips.raw()[0] as usize;
                self.flip_bra[j].dot(self.before_state(j)).norm_sqr()
            }
            _ => {
                let last = flips.last().expect("non-empty");
                let key = flips.prefix_key();
                if !self.rows.contains_key(&key) {
                    if self.rows.len() >= self.row_limit {
                        self.rows.clear();
                    }
                    let row = self.start_row(flips);
                    self.rows.insert(key, row);
                }
                let row = self.rows.get_mut(&key).expect("row present");
                extend_row(
                    self.engine,
                    &self.signs,
                    &self.flip_bra,
                    row,
                    last,
                    &mut self.scratch,
                );
                row.values[last - row.start]
            }
        }
    }

    /// Propagates the current protocol with all but the last flip of
    /// `flips` applied, up to and including the last prefix flip.
    fn start_row(&mut self, flips: &FlipSet) -> Row {
        let raw = flips.raw();
        let prefix = &raw[..raw.len() - 1];
        let first = prefix[0] as usize;
        let p = *prefix.last().expect("non-empty prefix") as usize;
        let mut state = self.before_state(first).clone();
        let mut basis = self.before_basis(first);
        let mut scratch = Amps::zeros(state.re.len());
        let mut flip_iter = prefix.iter().peekable();
        for j in first..=p {
            let mut s = self.sector_at(j);
            if flip_iter.peek().is_some_and(|&&f| f as usize == j) {
                s = 1 - s;
                flip_iter.next();
            }
            self.engine.step(&mut state, &mut basis, s, &mut scratch);
        }
        Row {
            state,
            basis,
            next: p + 1,
            start: p + 1,
            values: Vec::with_capacity(self.signs.len() - p - 1),
        }
    }

    /// Applies `flips` to the current protocol and refreshes the caches.
    pub fn accept(&mut self, flips: &FlipSet) {
        for j in flips.indices() {
            self.signs[j] = -self.signs[j];
        }
        if let (Some(lo), Some(hi)) = (flips.first(), flips.last()) {
            self.rebuild(lo, hi);
        }
    }
}

fn extend_row(
    engine: &FidelityEngine,
    signs: &[i8],
    flip_bra: &[Amps],
    row: &mut Row,
    upto: usize,
    scratch: &mut Amps,
) {
    while row.next <= upto {
        let j = row.next;
        // the flip bra at j expects the state in the basis of σ_{j-1}
        let want = sector(signs[j - 1]);
        if row.basis != want {
            engine.rotate(&row.state, want, scratch);
            std::mem::swap(&mut row.state, scratch);
            row.basis = want;
        }
        row.values.push(flip_bra[j].dot(&row.state).norm_sqr());
        engine.step(&mut row.state, &mut row.basis, sector(signs[j]), scratch);
        row.next += 1;
    }
}
