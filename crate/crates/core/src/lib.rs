//! Numerical laboratory for the quantum adiabatic theorem.
//!
//! The crate propagates time-dependent Hamiltonians in scaled time with a
//! unitary integrator, tracks instantaneous eigenbases in the
//! parallel-transport gauge, builds dual systems `H_b = −U_a† H_a U_a`, and
//! measures how the adiabatic approximation converges (or fails to) as the
//! total duration `T` grows.
//!
//! ```
//! use adiabatic_lab::models::SpinRotatingField;
//! use adiabatic_lab::spectral::{berry_phase, build_eigenpath, DEFAULT_GAP_THRESHOLD};
//!
//! let model = SpinRotatingField { theta: std::f64::consts::FRAC_PI_2, ..Default::default() };
//! let ep = build_eigenpath(&model.path()?, 1024, DEFAULT_GAP_THRESHOLD)?;
//! let gamma = berry_phase(&ep, 1)?;
//! assert!((gamma.abs() - std::f64::consts::PI).abs() < 1e-5);
//! # Ok::<(), adiabatic_lab::LabError>(())
//! ```

pub mod adiabatic;
pub mod cli;
pub mod error;
pub mod evolve;
pub mod inconsistency;
pub mod models;
pub mod numerics;
pub mod spectral;

pub use error::{LabError, Result};
pub use numerics::{ComplexMatrix, HermitianMatrix, StateVector, UnitaryMatrix, C64};
