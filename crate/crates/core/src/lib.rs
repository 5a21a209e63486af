//! Exact diagonalization of the staggered-fermion lattice
//! Nambu-Jona-Lasinio model at half filling, with numerical checks of the
//! reflection-positivity bounds that certify chiral symmetry breaking.

pub mod bounds;
pub mod continuum;
pub mod error;
pub mod fock;
pub mod hamiltonian;
pub mod lattice;
pub mod operator;
pub mod scan;
pub mod spectra;
pub mod symmetry;

pub use error::{Error, Result};
