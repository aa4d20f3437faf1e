//! Numerical laboratory for the two-dimensional massive Dirac operator H = D_m + V:
//! free and perturbed resolvents, threshold classification, time evolution by split-step and
//! spectral quadrature, oscillatory-integral engines, and decay-rate experiments.

pub mod algebra;
pub mod error;
pub mod evolve;
pub mod freedirac;
pub mod grid;
pub mod harness;
pub mod operator;
pub mod oscquad;
pub mod potential;
pub mod quadrature;
pub mod specfun;
pub mod threshold;

pub use algebra::{Mat2, Spinor};
pub use error::{Error, Result};
pub use grid::Grid;
pub use harness::{DecayFit, DecaySeries, ExperimentConfig, Pipeline};
pub use num_complex::Complex64 as C64;
pub use operator::DiscreteOperator;
pub use potential::{HermitianField, PotentialKind, PotentialSpec, SpectralFactorization};
pub use specfun::Sign;
pub use threshold::{ThresholdKind, ThresholdReport};
