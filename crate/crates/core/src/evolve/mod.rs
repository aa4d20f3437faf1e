//! Time evolution e^{−itH}P_ac⟨H⟩^{−s} by split-step stepping, dense diagonalisation and
//! Stone's formula.

mod dense;
mod field;
mod split;
mod stone;

pub use dense::{
    discrete_hamiltonian, pac_project, smooth_power, symmetric_resolvent_defect, DenseSpectral,
    Projected, Smoothing,
};
pub use field::{
    apply_fourier_multiplier, apply_scalar_multiplier, frequency_lattice, CheckpointHeader, Fft2,
    SpinorField,
};
pub use split::{split_step, step_count, FreePropagator, SplitStepper};
pub use stone::{
    relative_error, restrict_to, GaussianPacket, StoneOutput, StoneProblem, StoneQuadrature,
};

/// Time-stepping method.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    SplitStep,
    Stone,
}

/// Parameters of an evolution run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    pub smoothing: f64,
    pub gap_tol: f64,
    pub method: Method,
}

impl EvolutionConfig {
    /// dt·√(ξ_max² + m²) ≤ π on the given grid.
    pub fn resolves(&self, grid: &crate::grid::Grid, mass: f64) -> bool {
        let x = grid.max_frequency();
        self.dt * (2.0 * x * x + mass * mass).sqrt() <= std::f64::consts::PI
    }
}
