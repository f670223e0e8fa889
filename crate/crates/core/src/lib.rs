//! Pseudo-spectral solver and function-space diagnostics for the
//! incompressible Navier-Stokes equation with fractional dissipation
//! `(−Δ)^α`, `α ∈ [1/2, 1]`, on the periodic torus.

pub mod analyticity;
pub mod cli;
pub mod decomposition;
pub mod estimates;
pub mod error;
pub mod semigroup;
pub mod solver;
pub mod spaces;
pub mod spectral;

pub use error::{Error, Result};
