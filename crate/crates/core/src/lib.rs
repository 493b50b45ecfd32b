//! State-vector simulation of false-vacuum decay in Rydberg atom rings.
//!
//! The crate is organised by stage of the workflow: [`lattice`] builds the
//! Hamiltonian, [`evolution`] propagates states, [`spectrum`] computes
//! low-lying eigenpairs, [`observables`] measures, [`analysis`] fits decay
//! curves, and [`drivers`] strings these together into the numerical
//! experiments. [`two_atom`] and [`protocol`] are self-contained.

pub mod analysis;
pub mod drivers;
pub mod error;
pub mod evolution;
pub mod lattice;
pub mod linalg;
pub mod observables;
pub mod protocol;
pub mod spectrum;
pub mod two_atom;

pub use error::{Error, Result};
