//! Numerical laboratory for pilot-wave dynamics with a complex electromagnetic
//! gauge coupling `e_C = e + i e_I`.
//!
//! The imaginary coupling component makes the Hamiltonian non-Hermitian and
//! promotes the familiar local phase symmetry to a local scale (Weyl) symmetry.
//! The Born density `|psi|^2` is then no longer conserved; the conserved object
//! is the trajectory-dependent ratio `|psi|^2 / S^2[C]`, where `S[C]` is the
//! scale factor parallel-transported along the pilot-wave trajectory `C`
//! arriving at each configuration-space point.
//!
//! The crate is organized around that pipeline:
//!
//! - [`grid`], [`field`], [`spectral`], [`interp`]: periodic grids, complex
//!   scalar/spinor fields, FFT derivatives, and high-order local interpolation.
//! - [`gaugefield`]: scalar/vector potentials and couplings.
//! - [`dynamics`]: Hamiltonians and time steppers (Crank-Nicolson, spectral
//!   RK4) for the supported systems.
//! - [`guidance`]: velocity fields and trajectory integration.
//! - [`weylscale`]: log-scale accumulation, conserved-density reconstruction,
//!   continuity and Hamilton-Jacobi residuals, quantum potential.
//! - [`gauge`]: gauge transformations and end-to-end invariance checks.
//! - [`equilibrium`]: ensembles, H-functions, relaxation and uniqueness
//!   experiments.
//! - [`presets`]: ready-made states and run setups used by tests and the CLI.

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod gauge;
pub mod gaugefield;
pub mod grid;
pub mod guidance;
pub mod interp;
pub mod presets;
pub mod spectral;
pub mod weylscale;

pub mod equilibrium;

pub use constants::PhysicalConstants;
pub use error::{PilotWaveError, Result};
pub use field::{ComplexScalarField, PolarDecomposition, QuantumState, SpinorField};
pub use gaugefield::{Coupling, GaugeConfiguration};
pub use grid::GridSpec;

/// Complex double used everywhere.
pub type C64 = num_complex::Complex64;
