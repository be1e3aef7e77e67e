//! Dense Hamiltonian of the periodic Ising chain
//!
//! ```text
//! H(h) = -Σ_i [ J S^z_{i+1} S^z_i + g S^z_i + h S^x_i ],   i + 1 taken mod L
//! ```
//!
//! Basis states are labelled by an integer whose bit `L - 1 - i` encodes the
//! spin at site `i` (0 = up, 1 = down), so index 0 is `|↑↑…↑⟩` and for `L = 2`
//! the ordering is `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`.
//!
//! The bond sum runs over every site `i` with partner `i + 1 mod L`; for
//! `L = 2` both bonds `(0,1)` and `(1,0)` are present and the pair
//! interaction is counted twice.
//!
//! All operators are real in the `S^z` basis, so `H` is stored as a real
//! symmetric matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use super::{ControlProblem, QuantumError, QuantumState};

/// Gap below which the ground state is reported as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

#[inline]
fn site_bit(sites: usize, site: usize) -> usize {
    sites - 1 - site
}

/// Builds `H(h)` for the chain described by `problem`.
pub fn build_hamiltonian(
    problem: &ControlProblem,
    field: f64,
) -> Result<DMatrix<f64>, QuantumError> {
    problem.validate()?;
    if field.abs() > problem.field_max * (1.0 + 1e-12) {
        return Err(QuantumError::FieldOutOfBounds {
            field,
            max: problem.field_max,
        });
    }
    let sites = problem.sites;
    let dim = problem.dimension();
    let s = problem.spin_convention.scale();
    let mut h = DMatrix::<f64>::zeros(dim, dim);

    for state in 0..dim {
        let spin = |site: usize| -> f64 {
            if (state >> site_bit(sites, site)) & 1 == 0 {
                s
            } else {
                -s
            }
        };
        let mut diag = 0.0;
        for i in 0..sites {
            let j = (i + 1) % sites;
            diag -= problem.coupling * spin(j) * spin(i);
            diag -= problem.z_field * spin(i);
        }
        h[(state, state)] = diag;
        if field != 0.0 {
            for i in 0..sites {
                let partner = state ^ (1 << site_bit(sites, i));
                h[(partner, state)] -= field * s;
            }
        }
    }
    Ok(h)
}

/// Lowest eigenpair of `H(h)`.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: QuantumState,
    /// Gap to the first excited level.
    pub gap: f64,
    /// Set when `gap < DEGENERACY_GAP`; `state` is then one arbitrary
    /// vector of the lowest eigenspace.
    pub degenerate: bool,
}

/// Full spectral decomposition of a real symmetric matrix with eigenvalues
/// sorted ascending and eigenvectors in the matching columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn of(matrix: DMatrix<f64>) -> Spectrum {
        let dim = matrix.nrows();
        let eig = SymmetricEigen::new(matrix);
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let energies = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let mut vectors = DMatrix::<f64>::zeros(dim, dim);
        for (col, &k) in order.iter().enumerate() {
            let mut v = eig.eigenvectors.column(k).clone_owned();
            fix_sign(v.as_mut_slice());
            vectors.set_column(col, &v);
        }
        Spectrum { energies, vectors }
    }
}

/// Makes the first non-negligible entry positive.
fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

pub(crate) fn ground_state_of(spectrum: &Spectrum) -> GroundState {
    let energy = spectrum.energies[0];
    let gap = spectrum
        .energies
        .get(1)
        .map(|e| e - energy)
        .unwrap_or(f64::INFINITY);
    let column = spectrum.vectors.column(0);
    let amplitudes = column.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    GroundState {
        energy,
        state: QuantumState::from_amplitudes(amplitudes),
        gap,
        degenerate: gap < DEGENERACY_GAP,
    }
}

/// Ground state of `H(h)` by dense diagonalization. The phase is fixed so
/// that the first non-negligible amplitude is real and positive.
pub fn ground_state(problem: &ControlProblem, field: f64) -> Result<GroundState, QuantumError> {
    let h = build_hamiltonian(problem, field)?;
    Ok(ground_state_of(&Spectrum::of(h)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::SpinConvention;

    fn bare(sites: usize, coupling: f64, z_field: f64) -> ControlProblem {
        let mut p = ControlProblem::new(sites, 1.0, 10);
        p.coupling = coupling;
        p.z_field = z_field;
        p
    }

    #[test]
    fn all_couplings_off_gives_zero_matrix() {
        let h = build_hamiltonian(&bare(2, 0.0, 0.0), 0.0).unwrap();
        assert!(h.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn two_site_periodic_bond_is_counted_twice() {
        // -J (s1 s2 + s2 s1) for |↑↑⟩,|↑↓⟩,|↓↑⟩,|↓↓⟩
        let h = build_hamiltonian(&bare(2, 1.0, 0.0), 0.0).unwrap();
        let diag: Vec<f64> = (0..4).map(|k| h[(k, k)]).collect();
        assert_eq!(diag, vec![-2.0, 2.0, 2.0, -2.0]);
        for r in 0..4 {
            for c in 0..4 {
                if r != c {
                    assert_eq!(h[(r, c)], 0.0);
                }
            }
        }
    }

    #[test]
    fn hand_expanded_two_site_matrix() {
        // J = 1, g = 1, h = 0.5, Pauli:
        // diag: -(2 s1 s2 + s1 + s2), offdiag: -h between single spin flips
        let mut p = bare(2, 1.0, 1.0);
        p.field_max = 4.0;
        let h = build_hamiltonian(&p, 0.5).unwrap();
        let expect = [
            [-4.0, -0.5, -0.5, 0.0],
            [-0.5, 2.0, 0.0, -0.5],
            [-0.5, 0.0, 2.0, -0.5],
            [0.0, -0.5, -0.5, 0.0],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(h[(r, c)], expect[r][c], "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn spin_half_scales_terms() {
        let p = bare(2, 1.0, 1.0).with_spin_convention(SpinConvention::SpinHalf);
        let h = build_hamiltonian(&p, 1.0).unwrap();
        // |↑↑⟩: -(2 * 1/4 + 2 * 1/2) = -1.5
        assert_eq!(h[(0, 0)], -1.5);
        assert_eq!(h[(0, 1)], -0.5);
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        let p = bare(5, 0.7, -0.3);
        let h = build_hamiltonian(&p, 1.3).unwrap();
        assert_eq!(h.clone(), h.transpose());
    }

    #[test]
    fn field_beyond_bound_is_rejected() {
        assert!(matches!(
            build_hamiltonian(&bare(3, 1.0, 1.0), 4.5),
            Err(QuantumError::FieldOutOfBounds { .. })
        ));
    }

    #[test]
    fn oversized_chain_is_rejected() {
        let p = ControlProblem::new(13, 1.0, 4);
        assert!(matches!(
            build_hamiltonian(&p, 0.0),
            Err(QuantumError::DimensionTooLarge { .. })
        ));
    }

    #[test]
    fn decoupled_transverse_ground_state() {
        // H = +2 Σ S^x: each site sits in the S^x = -1 state (|↑⟩ - |↓⟩)/√2.
        let gs = ground_state(&bare(3, 0.0, 0.0), -2.0).unwrap();
        assert!((gs.energy + 6.0).abs() < 1e-12);
        let amp = 1.0 / 8f64.sqrt();
        for (k, a) in gs.state.amplitudes().iter().enumerate() {
            let parity = if (k as u32).count_ones().is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            assert!((a.re - parity * amp).abs() < 1e-10, "amplitude {k}");
            assert!(a.im.abs() < 1e-14);
        }
        assert!(!gs.degenerate);
    }

    #[test]
    fn decoupled_longitudinal_ground_state() {
        let gs = ground_state(&bare(3, 0.0, 1.0), 0.0).unwrap();
        assert!((gs.energy + 3.0).abs() < 1e-12);
        assert!((gs.state.amplitudes()[0].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_ground_space_is_flagged() {
        // J = 1, g = 0, h = 0: the two ferromagnetic states are degenerate.
        let gs = ground_state(&bare(3, 1.0, 0.0), 0.0).unwrap();
        assert!(gs.degenerate);
        assert!((gs.state.norm() - 1.0).abs() < 1e-12);
    }
}
