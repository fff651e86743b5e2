//! Symbolic mode algebra for the small N=4 superconformal algebra and a
//! free-fermion Fock space for checking operator relations concretely.

pub mod fock;
pub mod n4;
