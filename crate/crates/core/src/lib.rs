//! Lie algebroid Hamiltonian mechanics in local coordinates, with sampled
//! residual checks for the geometric Hamilton-Jacobi theorems.

pub mod algebroid;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod hamilton_jacobi;
pub mod prolongation;
pub mod report;
pub mod sampling;
pub mod scenario;
pub mod time_extension;

pub use error::{Error, Result};
