//! Hamiltonian systems with many first integrals: the three-body inverse-square
//! chain, the axially symmetric family `k(φ)/(x₁² + x₂²)` it rotates into,
//! and numerical checks of conservation, involution, independence and orbit
//! closure.

pub mod charts;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod integrals;
pub mod killing;
pub mod models;
pub mod numcore;
pub mod phase;
pub mod verify;

pub use error::{Error, EvalError, Result};
pub use phase::{poisson_bracket, HamiltonianSystem, Observable, PhaseState};
