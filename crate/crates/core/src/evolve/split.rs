//! Strang split-step integrator: exact free Fourier steps and pointwise potential phases.

use super::field::{apply_fourier_multiplier, frequency_lattice, Fft2, SpinorField};
use crate::algebra::Mat2;
use crate::error::{Error, Result};
use crate::freedirac::free_symbol;
use crate::grid::Grid;
use crate::potential::HermitianField;

/// Exact free propagator exp(−it(α·ξ + mβ)) as a Fourier multiplier.
pub struct FreePropagator {
    grid: Grid,
    mass: f64,
    xi: Vec<[f64; 2]>,
    fft: Fft2,
}

impl FreePropagator {
    pub fn new(grid: Grid, mass: f64) -> Self {
        FreePropagator {
            grid,
            mass,
            xi: frequency_lattice(&grid),
            fft: Fft2::new(grid.n()),
        }
    }

    pub fn symbols(&self, t: f64) -> Vec<Mat2> {
        self.xi.iter().map(|&x| free_symbol(x, t, self.mass)).collect()
    }

    pub fn evolve(&mut self, psi: &SpinorField, t: f64) -> Result<SpinorField> {
        if psi.grid != self.grid {
            return Err(Error::Validation("field and propagator grids differ".into()));
        }
        let sym = self.symbols(t);
        let mut out = psi.clone();
        apply_fourier_multiplier(&mut self.fft, &mut out, &sym);
        Ok(out)
    }
}

/// Number of steps of size `dt` that make up `t`.
pub fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Stepping(format!("dt must be positive, got {dt}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Stepping(format!("t must be nonnegative, got {t}")));
    }
    let n = (t / dt).round();
    if (n * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::Stepping(format!("t = {t} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

pub struct SplitStepper {
    grid: Grid,
    dt: f64,
    free: Vec<Mat2>,
    half: Option<Vec<Mat2>>,
    full: Option<Vec<Mat2>>,
    fft: Fft2,
}

impl SplitStepper {
    pub fn new(grid: Grid, mass: f64, potential: &HermitianField, dt: f64) -> Result<Self> {
        if potential.grid != grid {
            return Err(Error::Validation("potential and field grids differ".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Stepping(format!("dt must be positive, got {dt}")));
        }
        let free = FreePropagator::new(grid, mass).symbols(dt);
        let (half, full) = if potential.is_zero() {
            (None, None)
        } else {
            (
                Some(potential.values.iter().map(|v| v.exp_i_hermitian(0.5 * dt)).collect()),
                Some(potential.values.iter().map(|v| v.exp_i_hermitian(dt)).collect()),
            )
        };
        Ok(SplitStepper {
            grid,
            dt,
            free,
            half,
            full,
            fft: Fft2::new(grid.n()),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances `psi` by `steps` Strang steps; interior half steps are fused.
    pub fn advance(&mut self, psi: &mut SpinorField, steps: usize) -> Result<()> {
        if psi.grid != self.grid {
            return Err(Error::Validation("field and stepper grids differ".into()));
        }
        if steps == 0 {
            return Ok(());
        }
        match (&self.half, &self.full) {
            (Some(half), Some(full)) => {
                psi.apply_pointwise(half);
                for k in 0..steps {
                    apply_fourier_multiplier(&mut self.fft, psi, &self.free);
                    psi.apply_pointwise(if k + 1 == steps { half } else { full });
                }
            }
            _ => {
                for _ in 0..steps {
                    apply_fourier_multiplier(&mut self.fft, psi, &self.free);
                }
            }
        }
        if !psi.is_finite() {
            return Err(Error::Stepping(format!(
                "non-finite samples after {steps} steps of dt = {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Evolves `psi0` to time `t` with step `dt`.
pub fn split_step(
    psi0: &SpinorField,
    potential: &HermitianField,
    mass: f64,
    t: f64,
    dt: f64,
) -> Result<SpinorField> {
    let steps = step_count(t, dt)?;
    let mut stepper = SplitStepper::new(psi0.grid, mass, potential, dt)?;
    let mut psi = psi0.clone();
    stepper.advance(&mut psi, steps)?;
    Ok(psi)
}
