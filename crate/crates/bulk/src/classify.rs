//! Classification arithmetic for self-dual theories at central charge 12.
//!
//! A self-dual theory with central charge 12 has a Neveu-Schwarz partition
//! function pinned by modularity to `q^(-1/2) + d + 276 q^(1/2) + ...`,
//! where `d` is the dimension of the weight-1/2 subspace. Matching the two
//! available expansions of the weight-2 trace of `o(u) o(u')` for currents
//! `u, u'` commuting with the free fermions forces the Killing form to be
//! `(44 + 2d)` times the invariant pairing. Evaluated on a long root of a
//! simple component at level `k`, this reads `h = (22 + d) k` for the dual
//! Coxeter number `h`, so candidates are read off a finite table:
//!
//! | family | rank    | dual Coxeter |
//! |--------|---------|--------------|
//! | A_n    | n >= 1  | n + 1        |
//! | B_n    | n >= 2  | 2n - 1       |
//! | C_n    | n >= 2  | n + 1        |
//! | D_n    | n >= 3  | 2n - 2       |
//! | E6     | 6       | 12           |
//! | E7     | 7       | 18           |
//! | E8     | 8       | 30           |
//! | F4     | 4       | 9            |
//! | G2     | 2       | 4            |
//!
//! With the Lie rank bounded by `12 - d/2`, the scan over `0 <= d < 24`
//! leaves exactly two solutions: `(d, type, level) = (0, D12, 1)` and
//! `(8, E8, 1)`.

use std::fmt;

use num_traits::Zero;
use serde::Serialize;

use vosa_core::characters::{fermion_character, FermionSector};
use vosa_core::cyclotomic::{rat, rat_int, CycNum, Rat};
use vosa_core::lattices::{make_lattice, theta, Coset, LatticeKind, SignCharacter};
use vosa_core::series::{eisenstein_e2, q_to_grid, JacobiSeries, Q64};

use crate::decomp::BulkError;

/// Family label of a simple complex Lie algebra. The derived order
/// A < B < C < D < E6 < E7 < E8 < F4 < G2 is the canonical tie-break when
/// two labels share a rank and dual Coxeter number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Family {
    A,
    B,
    C,
    D,
    E6,
    E7,
    E8,
    F4,
    G2,
}

impl Family {
    /// All family labels, in canonical order.
    pub const ALL: [Family; 9] = [
        Family::A,
        Family::B,
        Family::C,
        Family::D,
        Family::E6,
        Family::E7,
        Family::E8,
        Family::F4,
        Family::G2,
    ];
}

/// A simple type identified by family and rank, carrying its dual Coxeter
/// number from the table above.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SimpleType {
    pub family: Family,
    pub rank: i64,
    pub dual_coxeter: i64,
}

impl SimpleType {
    /// Builds the type with the tabulated dual Coxeter number. Ranks below
    /// the classical minima (A >= 1, B >= 2, C >= 2, D >= 3) are rejected:
    /// B1 and C1 rename A1, and D2 is not simple. Exceptional labels carry
    /// a fixed rank.
    pub fn new(family: Family, rank: i64) -> Option<SimpleType> {
        let dual_coxeter = match family {
            Family::A if rank >= 1 => rank + 1,
            Family::B if rank >= 2 => 2 * rank - 1,
            Family::C if rank >= 2 => rank + 1,
            Family::D if rank >= 3 => 2 * rank - 2,
            Family::E6 if rank == 6 => 12,
            Family::E7 if rank == 7 => 18,
            Family::E8 if rank == 8 => 30,
            Family::F4 if rank == 4 => 9,
            Family::G2 if rank == 2 => 4,
            _ => return None,
        };
        Some(SimpleType {
            family,
            rank,
            dual_coxeter,
        })
    }
}

impl fmt::Display for SimpleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letter = match self.family {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
            Family::E6 | Family::E7 | Family::E8 => "E",
            Family::F4 => "F",
            Family::G2 => "G",
        };
        write!(f, "{letter}{}", self.rank)
    }
}

/// All simple types of rank at most `max_rank`, one entry per (rank, dual
/// Coxeter) pair. Labels sharing both numbers are indistinguishable to the
/// level scan, so each group keeps only its first family in canonical
/// order: A3 stands for the coincidence with D3, and A2 for the B2 = C2
/// pair at the same rank and dual Coxeter number.
pub fn simple_types_up_to_rank(max_rank: i64) -> Vec<SimpleType> {
    let mut all = Vec::new();
    for rank in 1..=max_rank {
        for family in Family::ALL {
            if let Some(t) = SimpleType::new(family, rank) {
                all.push(t);
            }
        }
    }
    all.sort_by_key(|t| (t.rank, t.dual_coxeter, t.family));
    all.dedup_by_key(|t| (t.rank, t.dual_coxeter));
    all
}

/// Neveu-Schwarz partition function of a self-dual central charge 12
/// theory whose weight-1/2 subspace has dimension `d`: the 24-fermion
/// product `q^(-1/2) prod (1 + q^(k-1/2))^24` shifted by the constant
/// `d - 24`. The expansion begins `q^(-1/2) + d + 276 q^(1/2)`.
pub fn znsns_c12(d: i64, trunc: Q64) -> Result<JacobiSeries, BulkError> {
    assert!((0..=24).contains(&d), "weight-1/2 dimension out of range");
    let base = fermion_character(24, FermionSector::NS, false, trunc)?;
    let shift = JacobiSeries::from_terms_grid(
        q_to_grid(trunc)?,
        [(0, 0, CycNum::from_integer(d - 24))],
    );
    Ok(base.add(&shift)?)
}

/// The eta-quotient variant `eta(tau)^24 / eta(2 tau)^24 + 24 + d`,
/// expanded as `q^(-1) prod_{n odd} (1 - q^n)^24 + 24 + d`. Its leading
/// exponent is `q^(-1)`, one half-period off from the `q^(-1/2)` of
/// [`znsns_c12`]; the two agree from the constant term up only after the
/// substitution `q -> q^2` and a sign flip on odd half-integer powers. It
/// is kept alongside so the mismatch stays machine-visible.
pub fn znsns_eta_quotient(d: i64, trunc: Q64) -> Result<JacobiSeries, BulkError> {
    assert!((0..=24).contains(&d), "weight-1/2 dimension out of range");
    let t24 = q_to_grid(trunc)?;
    let mut out = JacobiSeries::from_terms_grid(t24, [(-24, 0, CycNum::from_integer(1))]);
    let mut n = 1i64;
    // Factors (1 - q^n)^24 with 24 n - 24 >= t24 cannot reach the window.
    while 24 * n - 24 < t24 {
        let factor = JacobiSeries::from_terms_grid(
            t24,
            [(0, 0, CycNum::from_integer(1)), (24 * n, 0, CycNum::from_integer(-1))],
        );
        out = out.mul(&factor.pow_i(24)?)?;
        n += 2;
    }
    let shift = JacobiSeries::from_terms_grid(t24, [(0, 0, CycNum::from_integer(24 + d))]);
    Ok(out.add(&shift)?)
}

/// The weight-2 form `1 - 24 q^(1/2) + 24 q - 96 q^(3/2) + ...` spanning
/// the relevant space of modular forms: the D4 theta series at half-scale
/// exponents with the norm-parity sign.
pub fn signed_d4_theta(trunc: Q64) -> Result<JacobiSeries, BulkError> {
    let d4 = Coset::from_lattice(make_lattice(LatticeKind::D(4))?);
    Ok(theta(&d4, None, &SignCharacter::NormParity, trunc, Q64::new(1, 2))?)
}

/// Coefficients solved from the weight-2 matching, normalized so the
/// invariant pairing of the two currents is 1. Rationals render as strings
/// in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Weight2Match {
    /// Dimension of the weight-1/2 subspace.
    pub d: i64,
    /// Leading coefficient of the weight-2 trace; always -1/12.
    #[serde(serialize_with = "rat_string")]
    pub c_coeff: Rat,
    /// Constant coefficient; always -d/12.
    #[serde(serialize_with = "rat_string")]
    pub d_coeff: Rat,
    /// Killing pairing of the two currents; always 44 + 2d.
    #[serde(serialize_with = "rat_string")]
    pub kappa: Rat,
}

fn rat_string<S: serde::Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Matches the two expansions of the weight-2 trace through `q^(1/2)` and
/// solves for the leading coefficient, the constant, and the Killing
/// pairing, all normalized by the invariant pairing of the currents.
///
/// The first expansion writes the trace as an unknown combination of
/// `-2 q d/dq` of the partition function and the signed D4 theta series.
/// The second subtracts `1/12` of the quasi-modular E2 times the partition
/// function from a trace that starts at `kappa q^(1/2)`. Equating the
/// three coefficients at `q^(-1/2)`, `q^0`, `q^(1/2)` gives a square
/// rational system; a singular system reports a matching failure.
pub fn weight2_match(d: i64, trunc: Q64) -> Result<Weight2Match, BulkError> {
    assert!((0..24).contains(&d), "weight-1/2 dimension out of range");
    let z = znsns_c12(d, trunc)?;
    let a1 = z.qderiv()?.scalar_rat(&rat_int(-2));
    let a2 = signed_d4_theta(trunc)?;
    let b = eisenstein_e2(trunc)?.mul(&z)?.scalar_rat(&rat(-1, 12));
    // Unknowns (C, D, kappa); the trace contributes kappa only at q^(1/2).
    let mut rows = Vec::new();
    for qe24 in [-12i64, 0, 12] {
        let kappa_col = if qe24 == 12 { rat_int(-1) } else { rat_int(0) };
        rows.push(vec![
            rational(&a1.coeff(qe24, 0))?,
            rational(&a2.coeff(qe24, 0))?,
            kappa_col,
            rational(&b.coeff(qe24, 0))?,
        ]);
    }
    let sol = solve3(rows).ok_or(BulkError::MatchingFailed)?;
    let [c_coeff, d_coeff, kappa] = sol;
    Ok(Weight2Match {
        d,
        c_coeff,
        d_coeff,
        kappa,
    })
}

fn rational(c: &CycNum) -> Result<Rat, BulkError> {
    c.as_rational().ok_or(BulkError::MatchingFailed)
}

/// Solves a 3x3 rational system given as rows `[a, b, c | rhs]`. Returns
/// None when the matrix is singular.
fn solve3(mut m: Vec<Vec<Rat>>) -> Option<[Rat; 3]> {
    let n = 3;
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let inv = m[col][col].clone();
        for j in col..=n {
            m[col][j] = &m[col][j] / &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                for j in col..=n {
                    m[r][j] = &m[r][j] - &(&f * &m[col][j]);
                }
            }
        }
    }
    Some([m[0][n].clone(), m[1][n].clone(), m[2][n].clone()])
}

/// One admissible pair in the central charge 12 scan. Serializes as
/// `{"d": 0, "type": "D12", "level": 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ScanHit {
    pub d: i64,
    #[serde(rename = "type", serialize_with = "type_name")]
    pub simple_type: SimpleType,
    pub level: i64,
}

fn type_name<S: serde::Serializer>(t: &SimpleType, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&t.to_string())
}

/// Scans weight-1/2 dimensions `0 <= d < 24`, simple types of rank at most
/// `12 - d/2`, and levels `k >= 1`, keeping the pairs whose dual Coxeter
/// number equals `(22 + d) k`. The constraint is the Killing form identity
/// evaluated on a long root of a simple component outside the free-fermion
/// factor.
pub fn enumerate_solutions() -> Vec<ScanHit> {
    let mut hits = Vec::new();
    for d in 0..24i64 {
        // rank <= 12 - d/2, kept exact as 2 rank <= 24 - d.
        let max_rank = (24 - d) / 2;
        let modulus = 22 + d;
        for t in simple_types_up_to_rank(max_rank) {
            if t.dual_coxeter % modulus == 0 && t.dual_coxeter >= modulus {
                hits.push(ScanHit {
                    d,
                    simple_type: t,
                    level: t.dual_coxeter / modulus,
                });
            }
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Q64 {
        Q64::new(n, d)
    }

    #[test]
    fn dual_coxeter_numbers_match_the_table() {
        let a: &[i64] = &[2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13];
        let b: &[i64] = &[3, 5, 7, 9, 11, 13, 15, 17, 19, 21, 23];
        let c: &[i64] = &[3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13];
        let d: &[i64] = &[4, 6, 8, 10, 12, 14, 16, 18, 20, 22];
        for (i, &h) in a.iter().enumerate() {
            assert_eq!(SimpleType::new(Family::A, i as i64 + 1).unwrap().dual_coxeter, h);
        }
        for (i, &h) in b.iter().enumerate() {
            assert_eq!(SimpleType::new(Family::B, i as i64 + 2).unwrap().dual_coxeter, h);
        }
        for (i, &h) in c.iter().enumerate() {
            assert_eq!(SimpleType::new(Family::C, i as i64 + 2).unwrap().dual_coxeter, h);
        }
        for (i, &h) in d.iter().enumerate() {
            assert_eq!(SimpleType::new(Family::D, i as i64 + 3).unwrap().dual_coxeter, h);
        }
        for (family, rank, h) in [
            (Family::E6, 6, 12),
            (Family::E7, 7, 18),
            (Family::E8, 8, 30),
            (Family::F4, 4, 9),
            (Family::G2, 2, 4),
        ] {
            assert_eq!(SimpleType::new(family, rank).unwrap().dual_coxeter, h);
        }
        assert!(SimpleType::new(Family::B, 1).is_none());
        assert!(SimpleType::new(Family::C, 1).is_none());
        assert!(SimpleType::new(Family::D, 2).is_none());
        assert!(SimpleType::new(Family::E8, 7).is_none());
    }

    #[test]
    fn rank_table_collapses_label_coincidences() {
        let types = simple_types_up_to_rank(4);
        for pair in types.windows(2) {
            assert_ne!(
                (pair[0].rank, pair[0].dual_coxeter),
                (pair[1].rank, pair[1].dual_coxeter),
            );
        }
        let at = |rank: i64, h: i64| {
            let hits: Vec<_> = types
                .iter()
                .filter(|t| t.rank == rank && t.dual_coxeter == h)
                .collect();
            assert_eq!(hits.len(), 1);
            hits[0].family
        };
        // A3 = D3 (and C3 shares the numbers); A2 stands for B2 = C2.
        assert_eq!(at(3, 4), Family::A);
        assert_eq!(at(2, 3), Family::A);
        assert_eq!(at(2, 4), Family::G2);
        assert_eq!(at(3, 5), Family::B);
        assert_eq!(at(4, 9), Family::F4);
    }

    #[test]
    fn partition_function_leading_coefficients() {
        let trunc = q(2, 1);
        for d in 0..=24i64 {
            let z = znsns_c12(d, trunc).unwrap();
            assert_eq!(z.coeff(-12, 0), CycNum::one());
            assert_eq!(z.coeff(0, 0), CycNum::from_integer(d));
            assert_eq!(z.coeff(12, 0), CycNum::from_integer(276));
        }
        let full = znsns_c12(24, trunc).unwrap();
        let fermions = fermion_character(24, FermionSector::NS, false, trunc).unwrap();
        assert_eq!(full, fermions);
    }

    #[test]
    fn eta_quotient_variant_leads_at_the_wrong_exponent() {
        let trunc = q(3, 1);
        let lead = |s: &JacobiSeries| s.terms().map(|(&(e, _), _)| e).min().unwrap();
        let quotient = znsns_eta_quotient(24, trunc).unwrap();
        let product = znsns_c12(24, trunc).unwrap();
        assert_eq!(lead(&quotient), -24, "eta quotient leads at q^(-1)");
        assert_eq!(lead(&product), -12, "fermion product leads at q^(-1/2)");
        // The quotient is the product under q^(1/2) -> -q: coefficient j
        // of the quotient is (-1)^(j+1) times coefficient j/2 of the
        // product, constants excepted (both equal d there).
        for (&(e, z), c) in quotient.terms() {
            assert_eq!(z, 0);
            let j = e / 24;
            let pc = product.coeff(12 * j, 0).as_rational().unwrap();
            let expect = if j != 0 && j % 2 == 0 { -pc } else { pc };
            assert_eq!(c.as_rational().unwrap(), expect, "exponent {e}/24");
        }
    }

    #[test]
    fn weight2_match_solves_the_killing_normalization() {
        for d in [0i64, 5, 8, 23] {
            let m = weight2_match(d, q(2, 1)).unwrap();
            assert_eq!(m.c_coeff, rat(-1, 12));
            assert_eq!(m.d_coeff, rat(-d, 12));
            assert_eq!(m.kappa, rat_int(44 + 2 * d));
        }
        assert!(weight2_match(0, q(2, 1)).unwrap().d_coeff.is_zero());
    }

    #[test]
    fn weight2_match_is_truncation_independent() {
        let lo = weight2_match(5, q(3, 2)).unwrap();
        let hi = weight2_match(5, q(4, 1)).unwrap();
        assert_eq!(lo, hi);
    }

    #[test]
    fn scan_finds_exactly_d12_and_e8() {
        let hits = enumerate_solutions();
        assert_eq!(
            hits,
            vec![
                ScanHit {
                    d: 0,
                    simple_type: SimpleType::new(Family::D, 12).unwrap(),
                    level: 1,
                },
                ScanHit {
                    d: 8,
                    simple_type: SimpleType::new(Family::E8, 8).unwrap(),
                    level: 1,
                },
            ],
        );
        let json = serde_json::to_value(&hits).unwrap();
        assert_eq!(
            json,
            serde_json::json!([
                {"d": 0, "type": "D12", "level": 1},
                {"d": 8, "type": "E8", "level": 1},
            ]),
        );
    }
}
