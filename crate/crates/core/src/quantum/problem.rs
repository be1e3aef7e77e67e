use serde::{Deserialize, Serialize};

use super::QuantumError;

/// Largest chain length accepted for dense `2^L x 2^L` matrices.
pub const MAX_SITES: usize = 12;

/// Matrix convention used for the spin operators in the Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpinConvention {
    /// Pauli matrices, eigenvalues ±1.
    #[default]
    Pauli,
    /// Spin-1/2 operators, eigenvalues ±1/2.
    SpinHalf,
}

impl SpinConvention {
    /// Eigenvalue magnitude of a single-site operator.
    pub fn scale(self) -> f64 {
        match self {
            SpinConvention::Pauli => 1.0,
            SpinConvention::SpinHalf => 0.5,
        }
    }
}

/// A periodic Ising chain driven by a bang-bang transverse field, together
/// with the time discretization of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlProblem {
    /// Number of sites `L`.
    pub sites: usize,
    /// Nearest-neighbour coupling `J`.
    pub coupling: f64,
    /// Static longitudinal field `g`.
    pub z_field: f64,
    /// Control bound `h_max`; bangs take the values `±h_max`.
    pub field_max: f64,
    /// Transverse field whose ground state is the initial state.
    pub initial_field: f64,
    /// Transverse field whose ground state is the target state.
    pub target_field: f64,
    /// Protocol duration `T`.
    pub duration: f64,
    /// Number of bangs `N_T`.
    pub bangs: usize,
    pub spin_convention: SpinConvention,
}

impl ControlProblem {
    /// Chain of `sites` spins with the standard couplings `J = g = 1`,
    /// `h_max = 4` and initial/target fields `∓2`.
    pub fn new(sites: usize, duration: f64, bangs: usize) -> Self {
        ControlProblem {
            sites,
            coupling: 1.0,
            z_field: 1.0,
            field_max: 4.0,
            initial_field: -2.0,
            target_field: 2.0,
            duration,
            bangs,
            spin_convention: SpinConvention::Pauli,
        }
    }

    pub fn with_spin_convention(mut self, convention: SpinConvention) -> Self {
        self.spin_convention = convention;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_bangs(mut self, bangs: usize) -> Self {
        self.bangs = bangs;
        self
    }

    /// Hilbert space dimension `2^L`.
    pub fn dimension(&self) -> usize {
        1usize << self.sites
    }

    /// Duration of a single bang; zero when there are no bangs.
    pub fn time_step(&self) -> f64 {
        if self.bangs == 0 {
            0.0
        } else {
            self.duration / self.bangs as f64
        }
    }

    pub fn validate(&self) -> Result<(), QuantumError> {
        if self.sites < 2 {
            return Err(QuantumError::InvalidProblem(format!(
                "chain needs at least 2 sites, got {}",
                self.sites
            )));
        }
        if self.sites > MAX_SITES {
            return Err(QuantumError::DimensionTooLarge {
                sites: self.sites,
                max: MAX_SITES,
            });
        }
        let finite = [
            self.coupling,
            self.z_field,
            self.field_max,
            self.initial_field,
            self.target_field,
            self.duration,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(QuantumError::InvalidProblem(
                "all couplings, fields and the duration must be finite".into(),
            ));
        }
        if self.field_max <= 0.0 {
            return Err(QuantumError::InvalidProblem(format!(
                "field bound must be positive, got {}",
                self.field_max
            )));
        }
        if self.initial_field.abs() > self.field_max || self.target_field.abs() > self.field_max {
            return Err(QuantumError::InvalidProblem(format!(
                "initial ({}) and target ({}) fields must lie within ±{}",
                self.initial_field, self.target_field, self.field_max
            )));
        }
        if self.duration < 0.0 {
            return Err(QuantumError::InvalidProblem(format!(
                "duration must be non-negative, got {}",
                self.duration
            )));
        }
        Ok(())
    }
}
