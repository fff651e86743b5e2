//! Elliptic genera of marked bulk decompositions.
//!
//! The genus is the signed R-R trace with the antiholomorphic elliptic
//! variable set to zero. On a partition vector this means: collapse each
//! antiholomorphic factor over its z-grading, demand that every nonzero
//! antiholomorphic q-grade cancels across the summands (holomorphicity),
//! and keep the grade-zero slice. The result is a two-variable series that
//! should behave like a weak Jacobi form of index c/6.
//!
//! The standard index 1 comparison form is
//! phi_{0,1} = 4 sum_i (theta_i(u)/theta_i(0))^2 over the three even theta
//! functions, with q^0 row z + 10 + 1/z.

use std::collections::BTreeMap;

use serde::Serialize;

use vosa_core::characters::lattice_vosa_character;
use vosa_core::cyclotomic::{rat, rat_int, CycNum};
use vosa_core::lattices::{Coset, Lattice, Marking, SignCharacter};
use vosa_core::series::{q_to_grid, JacobiSeries, Q64};

use crate::decomp::{BulkDecomposition, BulkError};
use crate::partition::assemble_cached;

/// Shape report for a computed genus.
#[derive(Debug, Clone, Serialize)]
pub struct GenusVerdict {
    /// The z -> 1 specialization has no q-dependence.
    pub constant_at_z1: bool,
    /// Value of the specialization at q^0.
    pub z1_value: String,
    /// Index-1 elliptic relations on coefficients: evenness in the z-degree
    /// and the shift c(n, r) = c(n + r + 1, r + 2), on all pairs inside the
    /// truncation.
    pub elliptic_ok: bool,
    pub checked_pairs: usize,
}

/// Computes the genus series of a marked decomposition and its shape
/// verdict. Fails with a located term when some nonzero antiholomorphic
/// grade survives the sum.
pub fn elliptic_genus(
    b: &BulkDecomposition,
    trunc: Q64,
) -> Result<(JacobiSeries, GenusVerdict), BulkError> {
    if !b.is_super
        || b.summands
            .iter()
            .any(|s| s.left.marking.is_none() || s.right.marking.is_none())
    {
        return Err(BulkError::UnknownExample(format!(
            "elliptic genus needs elliptic markings on every summand of {}",
            b.example
        )));
    }
    let t24 = q_to_grid(trunc)?;
    let pv = assemble_cached(b, t24)?;
    // Slices of the signed R-R trace by antiholomorphic grade, with the
    // antiholomorphic z-grading collapsed.
    let mut slices: BTreeMap<i64, JacobiSeries> = BTreeMap::new();
    for term in &pv.entries[3] {
        for (&(qe_a, _), c) in term.anti.terms() {
            let piece = term.holo.scalar(c);
            match slices.get_mut(&qe_a) {
                Some(s) => *s = s.add(&piece)?,
                None => {
                    slices.insert(qe_a, piece);
                }
            }
        }
    }
    for (&qe_a, s) in &slices {
        if qe_a == 0 {
            continue;
        }
        if let Some((&(qe, ze), _)) = s.terms().find(|(_, c)| !c.is_zero()) {
            return Err(BulkError::NotHolomorphic {
                qe_anti: qe_a,
                qe_holo: qe,
                ze,
            });
        }
    }
    let genus = match slices.remove(&0) {
        Some(s) => s,
        None => JacobiSeries::zero(trunc)?,
    };
    let verdict = genus_verdict(&genus);
    Ok((genus, verdict))
}

fn genus_verdict(genus: &JacobiSeries) -> GenusVerdict {
    let special = genus.specialize_z(0);
    let constant_at_z1 = special
        .terms()
        .all(|(&(qe, _), c)| qe == 0 || c.is_zero());
    let z1_value = special
        .coeff(0, 0)
        .as_rational()
        .map(|r| r.to_string())
        .unwrap_or_else(|| "non-rational".into());
    let t24 = genus.trunc24();
    let mut elliptic_ok = true;
    let mut checked_pairs = 0usize;
    for (&(qe, ze), c) in genus.terms() {
        if ze % 6 != 0 {
            elliptic_ok = false;
            break;
        }
        if genus.coeff(qe, -ze) != *c {
            elliptic_ok = false;
            break;
        }
        checked_pairs += 1;
        let r = ze / 6;
        let qe_up = qe + 24 * (r + 1);
        if qe_up < t24 {
            if genus.coeff(qe_up, ze + 12) != *c {
                elliptic_ok = false;
                break;
            }
            checked_pairs += 1;
        }
    }
    GenusVerdict {
        constant_at_z1,
        z1_value,
        elliptic_ok,
        checked_pairs,
    }
}

/// One theta constituent: exponents on the 1/24 grid as (q, z) pairs over k.
fn theta_series(terms: impl Iterator<Item = (i64, i64, i64)>, t24: i64) -> JacobiSeries {
    JacobiSeries::from_terms_grid(
        t24,
        terms.map(|(qe, ze, sign)| (qe, ze, CycNum::from_rational(rat_int(sign)))),
    )
}

fn theta_range(t24: i64) -> i64 {
    // 12 n^2 < t24 plus margin.
    let mut n = 1;
    while 12 * n * n <= t24 {
        n += 1;
    }
    n
}

/// The weight 0 index 1 weak Jacobi form 4 sum (theta_i(u)/theta_i(0))^2.
pub fn phi01(trunc: Q64) -> Result<JacobiSeries, BulkError> {
    let wanted = q_to_grid(trunc)?;
    let t24 = wanted + 48;
    let n = theta_range(t24);
    let range = move || -n..=n;
    let t2 = |z: bool| {
        theta_series(
            range().map(move |k| (3 * (2 * k + 1) * (2 * k + 1), if z { 6 * k + 3 } else { 0 }, 1)),
            t24,
        )
    };
    let t3 = |z: bool| {
        theta_series(
            range().map(move |k| (12 * k * k, if z { 6 * k } else { 0 }, 1)),
            t24,
        )
    };
    let t4 = |z: bool| {
        theta_series(
            range().map(move |k| (12 * k * k, if z { 6 * k } else { 0 }, if k.rem_euclid(2) == 0 { 1 } else { -1 })),
            t24,
        )
    };
    let mut acc: Option<JacobiSeries> = None;
    for (num, den) in [(t2(true), t2(false)), (t3(true), t3(false)), (t4(true), t4(false))] {
        let quotient = num.pow_i(2)?.mul(&den.pow_i(-2)?)?;
        acc = Some(match acc {
            Some(a) => a.add(&quotient)?,
            None => quotient,
        });
    }
    let four = CycNum::from_rational(rat_int(4));
    Ok(acc.expect("three constituents").scalar(&four).truncate_to(trunc)?)
}

/// Signed or unsigned R-sector character of one rank 1 constituent of the
/// ternary examples, realized on Z(1,1,1) with coset shift (2t+1)/6 per
/// coordinate. The signed t = 1 character vanishes identically, and the
/// signed t = 0 and t = 2 characters are the constants exp(+-i pi/6) at
/// u = 0.
pub fn ternary_copy_character(t: u8, signed: bool, trunc: Q64) -> Result<JacobiSeries, BulkError> {
    let lat = Lattice::from_rows(vec![vec![rat_int(1); 3]]);
    let shift = vec![rat(2 * i64::from(t) + 1, 6); 3];
    let coset = Coset::with_shift(lat, shift);
    let marking = Marking::new(&coset, vec![rat(1, 3); 3])?;
    let sign = if signed {
        SignCharacter::Exp {
            w: vec![rat(1, 6); 3],
            offset: rat_int(0),
        }
    } else {
        SignCharacter::Trivial
    };
    Ok(lattice_vosa_character(&coset, Some(&marking), &sign, trunc)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::build_bulk;
    use num_complex::Complex64;
    use vosa_core::series::EvalPoint;

    #[test]
    fn phi01_leading_row() {
        let p = phi01(Q64::from_integer(2)).unwrap();
        assert_eq!(p.coeff(0, 0), CycNum::from_rational(rat_int(10)));
        assert_eq!(p.coeff(0, 6), CycNum::one());
        assert_eq!(p.coeff(0, -6), CycNum::one());
        assert_eq!(p.coeff(0, 12), CycNum::zero());
    }

    #[test]
    fn golay_genus_is_twice_phi01() {
        let b = build_bulk("golayD12", 6).unwrap();
        let (genus, verdict) = elliptic_genus(&b, Q64::from_integer(5)).unwrap();
        assert!(verdict.constant_at_z1, "z -> 1 not constant");
        assert_eq!(verdict.z1_value, "24");
        assert!(verdict.elliptic_ok);
        let reference = phi01(Q64::from_integer(3))
            .unwrap()
            .scalar(&CycNum::from_rational(rat_int(2)));
        let got = genus.truncate_to(Q64::from_integer(3)).unwrap();
        assert_eq!(got, reference, "genus differs from 2 phi01");
    }

    #[test]
    fn gepner_genus_matches_golay() {
        let golay = build_bulk("golayD12", 6).unwrap();
        let gepner = build_bulk("gepner16", 6).unwrap();
        let (g1, _) = elliptic_genus(&golay, Q64::from_integer(5)).unwrap();
        let (g2, v2) = elliptic_genus(&gepner, Q64::from_integer(5)).unwrap();
        assert_eq!(g1, g2);
        assert!(v2.constant_at_z1);
    }

    #[test]
    fn tetrahedral_genus_is_k3() {
        let b = build_bulk("tetrahedralK3", 3).unwrap();
        let (genus, verdict) = elliptic_genus(&b, Q64::from_integer(5)).unwrap();
        assert!(verdict.constant_at_z1);
        assert_eq!(verdict.z1_value, "24");
        let reference = phi01(Q64::from_integer(3))
            .unwrap()
            .scalar(&CycNum::from_rational(rat_int(2)));
        assert_eq!(genus.truncate_to(Q64::from_integer(3)).unwrap(), reference);
    }

    #[test]
    fn torus_genus_vanishes() {
        let b = build_bulk("torusD", 1).unwrap();
        let (genus, _) = elliptic_genus(&b, Q64::from_integer(5)).unwrap();
        assert!(genus.terms().all(|(_, c)| c.is_zero()), "nonzero genus");
    }

    #[test]
    fn ternary_copy_characters_specialize_as_claimed() {
        let trunc = Q64::from_integer(8);
        let f3 = ternary_copy_character(1, true, trunc).unwrap();
        assert!(f3.specialize_z(0).terms().all(|(_, c)| c.is_zero()));
        let p = EvalPoint::tau_only(Complex64::new(0.1, 1.3));
        let expect = Complex64::from_polar(1.0, std::f64::consts::PI / 6.0);
        for (t, sign) in [(0u8, 1.0), (2, -1.0)] {
            let f = ternary_copy_character(t, true, trunc).unwrap();
            let v = f.eval_numeric(&p, false, 1e-9).unwrap().value;
            let want = Complex64::new(expect.re, sign * expect.im);
            assert!((v - want).norm() < 1e-9, "t = {t}: {v} vs {want}");
        }
    }
}
