//! Spin-chain Hamiltonian, ground states and protocol fidelities.

mod amps;
mod engine;
pub mod hamiltonian;
mod problem;
mod protocol;
mod state;

pub(crate) use amps::Amps;
pub(crate) use engine::sector;
pub use engine::{Evaluation, FidelityEngine};
pub use hamiltonian::{build_hamiltonian, ground_state, GroundState, Spectrum};
pub use problem::{ControlProblem, SpinConvention, MAX_SITES};
pub use protocol::Protocol;
pub use state::QuantumState;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

/// Cost reported when the fidelity vanishes.
pub const COST_CAP: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuantumError {
    #[error("invalid control problem: {0}")]
    InvalidProblem(String),
    #[error("{sites} sites exceed the dense-matrix cap of {max}")]
    DimensionTooLarge { sites: usize, max: usize },
    #[error("field {field} exceeds the control bound {max}")]
    FieldOutOfBounds { field: f64, max: f64 },
    #[error("protocol has {found} bangs, problem expects {expected}")]
    ProtocolLength { expected: usize, found: usize },
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
}

/// The two exact single-bang unitaries `exp(-i δt H(±h_max))`.
#[derive(Debug, Clone)]
pub struct StepPropagators {
    pub plus: DMatrix<Complex64>,
    pub minus: DMatrix<Complex64>,
}

impl StepPropagators {
    pub fn for_sign(&self, sign: i8) -> &DMatrix<Complex64> {
        if sign > 0 {
            &self.plus
        } else {
            &self.minus
        }
    }

    /// Largest entry of `|U†U - 1|` over both unitaries.
    pub fn unitarity_error(&self) -> f64 {
        [&self.plus, &self.minus]
            .iter()
            .map(|u| {
                let p = u.adjoint() * *u;
                let n = p.nrows();
                let mut worst = 0.0f64;
                for r in 0..n {
                    for c in 0..n {
                        let expect = if r == c { 1.0 } else { 0.0 };
                        worst = worst.max((p[(r, c)] - Complex64::new(expect, 0.0)).norm());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the step unitaries for `problem` (dense, `O(8^L)` work).
pub fn step_propagators(problem: &ControlProblem) -> Result<StepPropagators, QuantumError> {
    Ok(FidelityEngine::new(problem)?.step_propagators())
}

/// Straightforward evolution by dense products:
/// `ψ(T) = U_{σ_N} ⋯ U_{σ_1} ψ_i`.
pub fn evolve(
    problem: &ControlProblem,
    protocol: &Protocol,
    propagators: &StepPropagators,
) -> Result<QuantumState, QuantumError> {
    if protocol.len() != problem.bangs {
        return Err(QuantumError::ProtocolLength {
            expected: problem.bangs,
            found: protocol.len(),
        });
    }
    let initial = ground_state(problem, problem.initial_field)?;
    let mut psi = DVector::from_column_slice(initial.state.amplitudes());
    for &s in protocol.bangs() {
        psi = propagators.for_sign(s) * psi;
    }
    Ok(QuantumState::from_amplitudes(psi.as_slice().to_vec()))
}

/// Fidelity of a single protocol. Builds a fresh [`FidelityEngine`]; reuse
/// an engine when evaluating many protocols.
pub fn fidelity(problem: &ControlProblem, protocol: &Protocol) -> Result<f64, QuantumError> {
    FidelityEngine::new(problem)?.fidelity(protocol)
}

/// Log-fidelity cost `-ln(F) / L` of a single protocol.
pub fn cost(problem: &ControlProblem, protocol: &Protocol) -> Result<f64, QuantumError> {
    FidelityEngine::new(problem)?.cost(protocol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cost {
    pub value: f64,
    /// `F` was zero (or not finite) and `value` is [`COST_CAP`].
    pub capped: bool,
}

/// `C = -ln(F) / L`, capped at [`COST_CAP`] when `F` vanishes. Fidelities
/// above one by roundoff map to zero cost.
pub fn cost_from_fidelity(fidelity: f64, sites: usize) -> Cost {
    if !(fidelity > 0.0) || !fidelity.is_finite() {
        return Cost {
            value: COST_CAP,
            capped: true,
        };
    }
    let value = -fidelity.min(1.0).ln() / sites as f64;
    if value > COST_CAP {
        Cost {
            value: COST_CAP,
            capped: true,
        }
    } else {
        Cost {
            value,
            capped: false,
        }
    }
}

/// Inverse of [`cost_from_fidelity`] for uncapped values.
pub fn fidelity_from_cost(cost: f64, sites: usize) -> f64 {
    (-cost * sites as f64).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_of_unit_fidelity_is_zero() {
        assert_eq!(cost_from_fidelity(1.0, 6).value, 0.0);
    }

    #[test]
    fn cost_inverts_exponential() {
        let l = 6;
        let c = cost_from_fidelity((-(l as f64)).exp(), l);
        assert!((c.value - 1.0).abs() < 1e-14);
        assert!(!c.capped);
    }

    #[test]
    fn zero_fidelity_is_capped() {
        let c = cost_from_fidelity(0.0, 4);
        assert!(c.capped);
        assert_eq!(c.value, COST_CAP);
    }

    #[test]
    fn cost_is_strictly_decreasing_in_fidelity() {
        let fs: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
        for w in fs.windows(2) {
            assert!(cost_from_fidelity(w[0], 6).value > cost_from_fidelity(w[1], 6).value);
        }
    }

    #[test]
    fn zero_duration_propagators_are_identity() {
        let problem = ControlProblem::new(3, 0.0, 5);
        let u = step_propagators(&problem).unwrap();
        for m in [&u.plus, &u.minus] {
            for r in 0..8 {
                for c in 0..8 {
                    let expect = if r == c { 1.0 } else { 0.0 };
                    assert!((m[(r, c)] - Complex64::new(expect, 0.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn propagators_are_unitary() {
        for (l, t, n) in [(2, 0.4, 4), (4, 3.0, 20), (6, 2.0, 50)] {
            let u = step_propagators(&ControlProblem::new(l, t, n)).unwrap();
            assert!(u.unitarity_error() < 1e-10, "L={l}");
        }
    }
}
