//! Numerical laboratory for sampling inequalities of Schrödinger operators.
//!
//! Builds equidistributed ball-union masks, finite-difference Schrödinger
//! operators on Dirichlet boxes, eigenpairs, spectral-projector bases and
//! Weyl iterates, and checks them against the closed-form lower bounds for
//! the mass a function keeps on the mask.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod hamiltonian;
pub mod io;
pub mod spectral;

pub use error::{Error, Result};
