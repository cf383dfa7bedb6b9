//! Exact Temperley-Lieb calculus, quantum loop-gas Hamiltonians and their
//! ground spaces, and the loop-gas / FK-Potts correspondence.

pub mod acceptance;
pub mod annular;
pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod linalg;
pub mod loopgas;
pub mod modular;
pub mod report;
pub mod scalar;
pub mod structure;
pub mod tl;

pub use error::{Error, Result};
