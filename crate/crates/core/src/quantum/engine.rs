//! Fidelity evaluation in the eigenbases of the two bang Hamiltonians.
//!
//! With `H_± = V_± E_± V_±ᵀ` a step is `U_± = V_± e^{-i E_± δt} V_±ᵀ`. A
//! state is carried as coefficients in the eigenbasis of the sign of the
//! last applied bang. A step of the same sign is a diagonal phase; a sign
//! change first rotates by the real orthogonal overlap `V_∓ᵀ V_±`. Runs of
//! equal bangs therefore cost `O(2^L)` per step instead of a dense product.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::amps::Amps;
use super::hamiltonian::{build_hamiltonian, ground_state_of, GroundState, Spectrum};
use super::{
    cost_from_fidelity, ControlProblem, Protocol, QuantumError, QuantumState, StepPropagators,
};

/// Index of the eigenbasis for a bang sign: 0 for `-h_max`, 1 for `+h_max`.
#[inline]
pub(crate) fn sector(sign: i8) -> usize {
    (sign > 0) as usize
}

/// Precomputed spectral data for one [`ControlProblem`]. Immutable after
/// construction and shareable across threads.
#[derive(Debug, Clone)]
pub struct FidelityEngine {
    problem: ControlProblem,
    /// Size of the space the evolution is carried out in.
    dim: usize,
    /// Spectra of the two bang Hamiltonians in the working space.
    spectra: [Spectrum; 2],
    /// Orthonormal columns spanning the working space inside the full
    /// Hilbert space, when it is a proper subspace.
    sector_map: Option<DMatrix<f64>>,
    phase_re: [Vec<f64>; 2],
    phase_im: [Vec<f64>; 2],
    /// `change[b]` maps coefficients in basis `1 - b` to basis `b`
    /// (column-major).
    change: [Vec<f64>; 2],
    initial: [Amps; 2],
    target: [Vec<f64>; 2],
    initial_ground: GroundState,
    target_ground: GroundState,
    bare_fidelity: f64,
}

/// Fidelity and cost of one protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub fidelity: f64,
    pub cost: f64,
    /// The fidelity vanished and `cost` holds the cap value.
    pub capped: bool,
}

impl FidelityEngine {
    pub fn new(problem: &ControlProblem) -> Result<Self, QuantumError> {
        problem.validate()?;
        let full_dim = problem.dimension();
        let dt = problem.time_step();

        let h_minus = build_hamiltonian(problem, -problem.field_max)?;
        let h_plus = build_hamiltonian(problem, problem.field_max)?;
        let initial_ground = ground_state_of(&Spectrum::of(build_hamiltonian(
            problem,
            problem.initial_field,
        )?));
        let target_ground = ground_state_of(&Spectrum::of(build_hamiltonian(
            problem,
            problem.target_field,
        )?));
        let real_part = |g: &GroundState| -> DVector<f64> {
            DVector::from_iterator(full_dim, g.state.amplitudes().iter().map(|a| a.re))
        };
        let mut psi_i = real_part(&initial_ground);
        let mut psi_t = real_part(&target_ground);

        // Both ground states are invariant under translations and the
        // reflection of the ring, and so is every H(h). Working in that
        // sector is exact and shrinks 2^L to the number of bracelets.
        let symmetric = symmetric_basis(problem.sites);
        let inside = |v: &DVector<f64>| (symmetric.transpose() * v).norm_squared();
        let reduce = !initial_ground.degenerate
            && !target_ground.degenerate
            && inside(&psi_i) > 1.0 - 1e-12
            && inside(&psi_t) > 1.0 - 1e-12
            && symmetric.ncols() < full_dim;
        let (h_minus, h_plus, sector_map) = if reduce {
            psi_i = symmetric.transpose() * &psi_i;
            psi_t = symmetric.transpose() * &psi_t;
            let r = |h: &DMatrix<f64>| symmetric.transpose() * h * &symmetric;
            (r(&h_minus), r(&h_plus), Some(symmetric))
        } else {
            (h_minus, h_plus, None)
        };
        let dim = psi_i.len();

        let minus = Spectrum::of(h_minus);
        let plus = Spectrum::of(h_plus);

        let phases = |s: &Spectrum| -> (Vec<f64>, Vec<f64>) {
            s.energies
                .iter()
                .map(|&e| {
                    let z = Complex64::from_polar(1.0, -e * dt);
                    (z.re, z.im)
                })
                .unzip()
        };
        let (m_re, m_im) = phases(&minus);
        let (p_re, p_im) = phases(&plus);

        // V_bᵀ V_{1-b}
        let to_minus = minus.vectors.transpose() * &plus.vectors;
        let to_plus = plus.vectors.transpose() * &minus.vectors;

        let in_basis = |s: &Spectrum, v: &DVector<f64>| -> Vec<f64> {
            (s.vectors.transpose() * v).as_slice().to_vec()
        };
        let initial = [
            Amps::from_real(&in_basis(&minus, &psi_i)),
            Amps::from_real(&in_basis(&plus, &psi_i)),
        ];
        let target = [in_basis(&minus, &psi_t), in_basis(&plus, &psi_t)];
        let bare_fidelity = target_ground
            .state
            .overlap_probability(&initial_ground.state);

        Ok(FidelityEngine {
            problem: problem.clone(),
            dim,
            spectra: [minus, plus],
            sector_map,
            phase_re: [m_re, p_re],
            phase_im: [m_im, p_im],
            change: [to_minus.as_slice().to_vec(), to_plus.as_slice().to_vec()],
            initial,
            target,
            initial_ground,
            target_ground,
            bare_fidelity,
        })
    }

    pub fn problem(&self) -> &ControlProblem {
        &self.problem
    }

    pub fn bangs(&self) -> usize {
        self.problem.bangs
    }

    /// Hilbert-space dimension `2^L`.
    pub fn dimension(&self) -> usize {
        self.problem.dimension()
    }

    /// Dimension of the invariant subspace the evolution runs in.
    pub fn working_dimension(&self) -> usize {
        self.dim
    }

    pub fn initial_ground(&self) -> &GroundState {
        &self.initial_ground
    }

    pub fn target_ground(&self) -> &GroundState {
        &self.target_ground
    }

    fn check_length(&self, protocol: &Protocol) -> Result<(), QuantumError> {
        if protocol.len() != self.problem.bangs {
            return Err(QuantumError::ProtocolLength {
                expected: self.problem.bangs,
                found: protocol.len(),
            });
        }
        Ok(())
    }

    /// `F = |⟨ψ_*|U_{σ_N}⋯U_{σ_1}|ψ_i⟩|²`.
    pub fn fidelity(&self, protocol: &Protocol) -> Result<f64, QuantumError> {
        self.check_length(protocol)?;
        Ok(self.fidelity_of_signs(protocol.bangs()))
    }

    pub fn cost(&self, protocol: &Protocol) -> Result<f64, QuantumError> {
        Ok(self.evaluate(protocol)?.cost)
    }

    pub fn evaluate(&self, protocol: &Protocol) -> Result<Evaluation, QuantumError> {
        let fidelity = self.fidelity(protocol)?;
        Ok(self.evaluation_from_fidelity(fidelity))
    }

    pub fn evaluation_from_fidelity(&self, fidelity: f64) -> Evaluation {
        let c = cost_from_fidelity(fidelity, self.problem.sites);
        Evaluation {
            fidelity,
            cost: c.value,
            capped: c.capped,
        }
    }

    pub(crate) fn fidelity_of_signs(&self, signs: &[i8]) -> f64 {
        if signs.is_empty() {
            return self.bare_fidelity;
        }
        let mut basis = sector(signs[0]);
        let mut amps = self.initial[basis].clone();
        let mut scratch = Amps::zeros(self.dim);
        self.apply_phase(&mut amps, basis);
        for &s in &signs[1..] {
            self.step(&mut amps, &mut basis, sector(s), &mut scratch);
        }
        self.target_overlap(&amps, basis).norm_sqr()
    }

    /// Final state `ψ(T)` in the `S^z` basis.
    pub fn evolve(&self, protocol: &Protocol) -> Result<QuantumState, QuantumError> {
        self.check_length(protocol)?;
        if protocol.is_empty() {
            return Ok(self.initial_ground.state.clone());
        }
        let signs = protocol.bangs();
        let mut basis = sector(signs[0]);
        let mut amps = self.initial[basis].clone();
        let mut scratch = Amps::zeros(self.dim);
        self.apply_phase(&mut amps, basis);
        for &s in &signs[1..] {
            self.step(&mut amps, &mut basis, sector(s), &mut scratch);
        }
        let v = &self.spectra[basis].vectors;
        let re = v * DVector::from_column_slice(&amps.re);
        let im = v * DVector::from_column_slice(&amps.im);
        let (re, im) = match &self.sector_map {
            Some(q) => (q * re, q * im),
            None => (re, im),
        };
        let out = re
            .iter()
            .zip(im.iter())
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect();
        Ok(QuantumState::from_amplitudes(out))
    }

    /// Dense step unitaries `U_± = exp(-i δt H(±h_max))` assembled from the
    /// spectral decompositions.
    pub fn step_propagators(&self) -> StepPropagators {
        let dt = self.problem.time_step();
        let build = |field: f64| -> DMatrix<Complex64> {
            let h = build_hamiltonian(&self.problem, field).expect("field within bounds");
            let s = Spectrum::of(h);
            let n = s.energies.len();
            let mut u = DMatrix::<Complex64>::zeros(n, n);
            for (k, &e) in s.energies.iter().enumerate() {
                let phase = Complex64::from_polar(1.0, -e * dt);
                let col = s.vectors.column(k);
                for c in 0..n {
                    let w = phase * col[c];
                    if w == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for r in 0..n {
                        u[(r, c)] += w * col[r];
                    }
                }
            }
            u
        };
        StepPropagators {
            plus: build(self.problem.field_max),
            minus: build(-self.problem.field_max),
        }
    }

    #[inline]
    pub(crate) fn apply_phase(&self, amps: &mut Amps, basis: usize) {
        amps.apply_phase(&self.phase_re[basis], &self.phase_im[basis]);
    }

    /// Re-expresses `amps` (a ket, or a bra row) from basis `1 - to` in basis `to`.
    #[inline]
    pub(crate) fn rotate(&self, amps: &Amps, to: usize, out: &mut Amps) {
        amps.rotate_into(&self.change[to], out);
    }

    /// Applies one bang of sector `next` to a state currently in `basis`.
    #[inline]
    pub(crate) fn step(&self, amps: &mut Amps, basis: &mut usize, next: usize, scratch: &mut Amps) {
        if *basis != next {
            self.rotate(amps, next, scratch);
            std::mem::swap(amps, scratch);
            *basis = next;
        }
        self.apply_phase(amps, next);
    }

    pub(crate) fn initial_in(&self, basis: usize) -> &Amps {
        &self.initial[basis]
    }

    pub(crate) fn target_in(&self, basis: usize) -> &[f64] {
        &self.target[basis]
    }

    pub(crate) fn target_overlap(&self, amps: &Amps, basis: usize) -> Complex64 {
        amps.dot_real(&self.target[basis])
    }

    pub(crate) fn bare_fidelity(&self) -> f64 {
        self.bare_fidelity
    }
}

/// Normalized orbit sums of `S^z` basis states under translations and the
/// reflection of a ring of `sites` spins, as columns.
pub(crate) fn symmetric_basis(sites: usize) -> DMatrix<f64> {
    let dim = 1usize << sites;
    let mask = dim - 1;
    let rotate = |s: usize| ((s << 1) | (s >> (sites - 1))) & mask;
    let reflect = |s: usize| (0..sites).fold(0, |acc, b| acc | (((s >> b) & 1) << (sites - 1 - b)));
    let mut seen = vec![false; dim];
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for start in 0..dim {
        if seen[start] {
            continue;
        }
        let mut orbit = Vec::new();
        for base in [start, reflect(start)] {
            let mut s = base;
            for _ in 0..sites {
                if !seen[s] {
                    seen[s] = true;
                    orbit.push(s);
                }
                s = rotate(s);
            }
        }
        orbits.push(orbit);
    }
    let mut q = DMatrix::<f64>::zeros(dim, orbits.len());
    for (c, orbit) in orbits.iter().enumerate() {
        let w = 1.0 / (orbit.len() as f64).sqrt();
        for &s in orbit {
            q[(s, c)] = w;
        }
    }
    q
}
