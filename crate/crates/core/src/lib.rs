//! Core exact-arithmetic layer for the vertex operator superalgebra workbench.
//!
//! The crate is organized bottom up:
//!
//! * [`cyclotomic`]: scalars from the degree 8 cyclotomic field Q(zeta_24),
//!   enough to hold every root of unity, sqrt(2) and sqrt(3) that graded
//!   traces of the objects studied here can produce.
//! * [`series`]: bivariate Puiseux-style series in q and z with cyclotomic
//!   coefficients, exact truncation bookkeeping and certified numerical
//!   evaluation on the upper half plane.
//! * [`codes`]: binary codes of D-type and the extended ternary Golay code,
//!   with marked weight enumerators.
//! * [`lattices`]: rational lattices and cosets, short vector enumeration,
//!   theta series with markings and sign characters, glue groups and
//!   discriminant form S-matrices.
//! * [`characters`]: graded characters of lattice and free fermion vertex
//!   superalgebras, the eta-quotient theta functions used by N=2 cosets and
//!   spectral flow checks on characters.

pub mod codes;
pub mod cyclotomic;
pub mod lattices;
pub mod characters;
pub mod series;
