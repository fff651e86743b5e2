//! Bulk two-sided conformal field theory assembly on top of `vosa-core`.
//!
//! A bulk Hilbert space here is an ordered direct sum of tensor products
//! N'_i (x) N''_i of modules of a holomorphic ("left") and an
//! antiholomorphic ("right") lattice vertex superalgebra. The crate builds
//! a fixed catalogue of such decompositions, then verifies the structural
//! claims attached to them:
//!
//! * [`decomp`]: the decomposition catalogue and exact bigraded theta
//!   comparison against a target coset union of a self-dual lattice.
//! * [`partition`]: four-component partition vectors graded by sector and
//!   fermion parity, the permutation S/T matrices acting on them, numeric
//!   modular checks with certified truncation tails, and the congruence /
//!   S-matrix-reality hypothesis report.
//! * [`flow`]: the exact exponent-shift form of spectral flow interchanging
//!   the Neveu-Schwarz and Ramond sectors.
//! * [`genus`]: elliptic genera obtained by specializing the right-moving
//!   variables, with weak Jacobi form verdicts.
//! * [`classify`]: the central charge 12 character scan matching a free
//!   fermion count d to a simple Lie type and level.
//!
//! All structural comparisons are exact (integer counts or cyclotomic
//! series equality); only modular transformations at sampled points of the
//! upper half plane are numeric, and those carry certified tail bounds.

use serde::Serialize;

pub mod classify;
pub mod decomp;
pub mod flow;
pub mod genus;
pub mod partition;

/// Uniform result record for a single verification, serializable to the
/// JSON shape {"example", "check", "residual", "pass", "first_mismatch"}.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    /// Example identifier, e.g. "diagD(n=2)" or "golayD12".
    pub example: String,
    /// Check identifier, e.g. "modular-S" or "decomposition-NS-NS".
    pub check: String,
    /// Numeric residual; exact checks report 0.0 on success.
    pub residual: f64,
    pub pass: bool,
    /// Human-readable locator of the first failing coefficient or point.
    pub first_mismatch: Option<String>,
}

impl CheckReport {
    /// Passing record with zero residual.
    pub fn pass(example: &str, check: &str) -> Self {
        CheckReport {
            example: example.to_string(),
            check: check.to_string(),
            residual: 0.0,
            pass: true,
            first_mismatch: None,
        }
    }

    /// Failing record with a mismatch locator.
    pub fn fail(example: &str, check: &str, residual: f64, at: String) -> Self {
        CheckReport {
            example: example.to_string(),
            check: check.to_string(),
            residual,
            pass: false,
            first_mismatch: Some(at),
        }
    }

    /// Record from a residual against a tolerance.
    pub fn from_residual(example: &str, check: &str, residual: f64, tol: f64) -> Self {
        CheckReport {
            example: example.to_string(),
            check: check.to_string(),
            residual,
            pass: residual < tol,
            first_mismatch: None,
        }
    }
}

/// Deterministic report order: by example id, then check id.
pub fn sort_reports(reports: &mut [CheckReport]) {
    reports.sort_by(|a, b| {
        (a.example.as_str(), a.check.as_str()).cmp(&(b.example.as_str(), b.check.as_str()))
    });
}
