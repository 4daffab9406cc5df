//! Pseudo-spectral split-operator Schrödinger solver.
//!
//! Dimensionless Hamiltonian `ℋ = -∇² + α(τ)·U(β, τ)` on power-of-two
//! lattices, BCH split steps of order 1–3 in real and imaginary time, an
//! imaginary-time eigensolver with deflation, and the measurement layer.
//! No I/O happens here; see the `splitstep` crate for configs and the CLI.

#![no_std]

extern crate alloc;

pub mod dsl;
pub mod eigen;
pub mod fft;
pub mod grid;
pub mod observables;
pub mod propagator;
pub mod wavefunction;

pub use eigen::{deflate, relax, spectrum, trial_state, EigenError, EigenOptions, EigenResult};
pub use dsl::{parse_potential, parse_with_params, DslError, Expr};
pub use grid::{characteristic_scales, make_grid, AxisSpec, Extent, Grid, GridError, ScaleEstimate};
pub use wavefunction::{Direction, Representation, Wavefunction, WavefunctionError};
pub use observables::{beat_period, energy_expectation, moments, probability_in_region, ObservableError, Snapshot};
pub use propagator::{
    choose_timestep, evolve, evolve_with, step_order1, step_order2, step_order3, EvolveOutcome, EvolvePlan,
    Hamiltonian, Mode, Order, PropagatorError, StepConfig, Stepper,
};
