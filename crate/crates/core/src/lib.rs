//! Curvature and torsion of quantum evolutions in projective Hilbert space.
//!
//! States follow `i ∂_t |ψ> = H(t) |ψ>` with `ħ = 1`. The geometric
//! coefficients are computed three ways: from expectation values of the
//! dispersion operator, from projectors applied to the parallel-transported
//! trajectory, and, for qubits, from the Bloch and field vectors.

pub mod cli;
pub mod error;
pub mod evolution;
pub mod frenet;
pub mod hilbert;
mod plot;
pub mod qubit;
pub mod rabi;
pub mod sampling;
pub mod scenario;
pub mod validate;

pub use error::{Error, Result};
