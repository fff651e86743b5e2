//! Graded characters: lattice vertex superalgebras, free fermions, the
//! N=2 minimal fermionic functions, and the spectral flow identity on
//! level 1 characters.
//!
//! All characters are Jacobi-type series in q^(1/24) and z^(1/6) with the
//! central charge offset included, so a character of central charge c
//! starts at q^(h - c/24).
//!
//! Key normalizations:
//!
//! | object                        | leading term                      |
//! |-------------------------------|-----------------------------------|
//! | V_Z (one free boson pair)     | q^(-1/24)                         |
//! | F(2n) Neveu-Schwarz           | q^(-n/24), equals the V_(Z^n) one |
//! | F(2n) Ramond                  | 2^n q^(n/12)                      |
//! | f_s fermionic string function | see below                         |
//!
//! The functions f_s (s mod 6) package an eta quotient with a charged
//! theta sum; f_3 vanishes at z = 1 by pair cancellation and f_(+-1)
//! specialize to the exact phases exp(+-i pi / 6).

use crate::cyclotomic::{rat, CycNum, Rat};
use crate::lattices::{
    make_lattice, theta, Coset, LatticeError, LatticeKind, Marking, SignCharacter,
};
use crate::series::{q_to_grid, eta_scaled, JacobiSeries, Q64, SeriesError};
use num_traits::One;
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from character constructions.
#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum CharacterError {
    #[error("unsupported fermion sector")]
    UnsupportedFermionSector,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// eta(tau)^r for any integer r, with truncation bookkeeping handled so the
/// result is valid through the requested order.
pub fn eta_power(r: i64, trunc: Q64) -> Result<JacobiSeries, SeriesError> {
    let t24 = q_to_grid(trunc)?;
    if r == 0 {
        return JacobiSeries::one(trunc);
    }
    let a = r.abs();
    if r > 0 {
        let eta = eta_scaled(Q64::one(), trunc)?;
        return eta.pow(a)?.truncate_to(trunc);
    }
    // Negative power: invert eta^a built with enough slack. Inversion costs
    // twice the leading exponent a/24.
    let build = Q64::new(t24 + 2 * a + 2, 24);
    let eta = eta_scaled(Q64::one(), build)?;
    let inv = eta.pow(a)?.pow_i(-1)?;
    inv.truncate_to(trunc)
}

/// Character of a lattice vertex superalgebra coset: theta over eta^rank,
/// with an optional marking for the elliptic variable and a sign character
/// for parity-graded traces.
pub fn lattice_vosa_character(
    coset: &Coset,
    marking: Option<&Marking>,
    sign: &SignCharacter,
    trunc: Q64,
) -> Result<JacobiSeries, CharacterError> {
    let t24 = q_to_grid(trunc)?;
    let rank = coset.lattice.rank() as i64;
    let th = theta(
        coset,
        marking,
        sign,
        Q64::new(t24 + rank, 24),
        Q64::one(),
    )?;
    let etainv = eta_power(-rank, trunc)?;
    Ok(th.mul(&etainv)?.truncate_to(trunc)?)
}

/// Free fermion sectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FermionSector {
    NS,
    R,
}

/// Character of n free Majorana fermions in the given sector. `signed`
/// inserts the fermion parity operator into the trace.
///
/// Odd n in the Neveu-Schwarz sector leaves the q^(1/24) grid and fails
/// with a denominator overflow; odd n in the Ramond sector is not
/// representable here at all.
pub fn fermion_character(
    n: usize,
    sector: FermionSector,
    signed: bool,
    trunc: Q64,
) -> Result<JacobiSeries, CharacterError> {
    let t24 = q_to_grid(trunc)?;
    let n_i = n as i64;
    match sector {
        FermionSector::NS => {
            // q^(-n/48) prod (1 +- q^(k - 1/2))^n.
            let lead = Q64::new(-n_i, 48);
            let mut acc = JacobiSeries::monomial(lead, 0, CycNum::one(), trunc)?;
            let build = Q64::new(t24 + n_i / 2 + 1, 24);
            let sign = if signed { -1 } else { 1 };
            let mut k = 1i64;
            while -n_i / 2 + 24 * k - 12 < t24 {
                let factor = JacobiSeries::one(build)?.add(&JacobiSeries::monomial(
                    Q64::new(2 * k - 1, 2),
                    0,
                    CycNum::from_integer(sign),
                    build,
                )?)?;
                acc = acc.mul(&factor.pow(n_i)?)?;
                k += 1;
            }
            Ok(acc.truncate_to(trunc)?)
        }
        FermionSector::R => {
            if n % 2 != 0 {
                return Err(CharacterError::UnsupportedFermionSector);
            }
            let m = n / 2;
            let lat = make_lattice(LatticeKind::Z(m))?;
            let shift = vec![rat(1, 2); m];
            let coset = Coset::with_shift(lat, shift);
            let sign = if signed {
                SignCharacter::Exp {
                    w: vec![rat(1, 2); m],
                    offset: rat(-(m as i64), 4),
                }
            } else {
                SignCharacter::Trivial
            };
            lattice_vosa_character(&coset, None, &sign, trunc)
        }
    }
}

/// The fermionic string function f_s, periodic in s mod 6:
///
///   f_s = eta^(-1) sum over k of (-1)^k zeta24^(2s) q^((6k+s)^2 / 24)
///         z^((6k+s)/6)
///
/// where the z charge is stored in sixth units as 6k + s.
pub fn n2_f(s: i64, trunc: Q64) -> Result<JacobiSeries, CharacterError> {
    let t24 = q_to_grid(trunc)?;
    let s = s.rem_euclid(6);
    let build = t24 + 1;
    let mut terms: BTreeMap<(i64, i64), CycNum> = BTreeMap::new();
    let bound = ((build.max(0) as f64).sqrt() as i64) + 7;
    let mut k = -(bound / 6 + 2);
    while 6 * k + s <= bound {
        let charge = 6 * k + s;
        let e = charge * charge;
        if e < build {
            let phase = CycNum::root_of_unity(2 * s + 12 * k);
            terms
                .entry((e, charge))
                .and_modify(|acc| *acc = &*acc + &phase)
                .or_insert(phase);
        }
        k += 1;
    }
    let theta_part = JacobiSeries::from_terms_grid(
        build,
        terms.into_iter().map(|((qe, ze), c)| (qe, ze, c)),
    );
    let etainv = eta_power(-1, Q64::new(t24, 24))?;
    Ok(theta_part.mul(&etainv)?.truncate_to(trunc)?)
}

/// Character of the level 1 su(2) lattice module with glue label j in
/// {0, 1}, marked so the z charge is twice the lattice coordinate.
pub fn a1_level1_character(j: usize, trunc: Q64) -> Result<JacobiSeries, CharacterError> {
    assert!(j < 2);
    let a1 = make_lattice(LatticeKind::A1(1))?;
    let alpha = a1.basis()[0].clone();
    let shift: Vec<Rat> = if j == 0 {
        vec![Rat::from_integer(0.into()); 2]
    } else {
        alpha.iter().map(|x| x / rat(2, 1)).collect()
    };
    let coset = Coset::with_shift(a1, shift);
    let marking = Marking::new(&coset, alpha)?;
    lattice_vosa_character(&coset, Some(&marking), &SignCharacter::Trivial, trunc)
}

/// Verifies the spectral flow identity on the level 1 characters:
/// substituting z -> z q^(l/2) and multiplying by z^l q^(l^2/4) turns the
/// label j character into the label j + l character, exactly, term by term
/// through the requested order.
pub fn spectral_flow_character_check(l: i64, trunc: Q64) -> Result<bool, CharacterError> {
    let t24 = q_to_grid(trunc)?;
    let mut margin = 24 * l * l + 48 * l.abs() + 24;
    for _attempt in 0..8 {
        let build = Q64::new(t24 + margin, 24);
        let mut all_ok = true;
        let mut enough = true;
        for j in 0..2usize {
            let ch = a1_level1_character(j, build)?;
            let flowed = ch.u_shift(l).shift(Q64::new(l * l, 4), 6 * l)?;
            if flowed.trunc24() < t24 {
                enough = false;
                break;
            }
            let target = a1_level1_character(((j as i64 + l).rem_euclid(2)) as usize, build)?;
            if flowed.truncate_to(trunc)? != target.truncate_to(trunc)? {
                all_ok = false;
            }
        }
        if !enough {
            margin *= 2;
            continue;
        }
        return Ok(all_ok);
    }
    Err(CharacterError::Series(SeriesError::InsufficientTruncation))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattices::d_coset_shift;

    fn q(n: i64, d: i64) -> Q64 {
        Q64::new(n, d)
    }

    #[test]
    fn eta_power_inverts() {
        let a = eta_power(12, q(4, 1)).unwrap();
        let b = eta_power(-12, q(4, 1)).unwrap();
        let prod = a.mul(&b).unwrap();
        let one = JacobiSeries::one(Q64::new(prod.trunc24(), 24)).unwrap();
        assert_eq!(prod, one);
    }

    #[test]
    fn d12plus_character_coefficients() {
        let coset = Coset::from_lattice(make_lattice(LatticeKind::DPlus(12)).unwrap());
        let ch = lattice_vosa_character(&coset, None, &SignCharacter::Trivial, q(2, 1)).unwrap();
        assert_eq!(ch.coeff(-12, 0), CycNum::one());
        assert!(ch.coeff(0, 0).is_zero());
        assert_eq!(ch.coeff(12, 0), CycNum::from_integer(276));
        assert_eq!(ch.coeff(24, 0), CycNum::from_integer(2048));
    }

    #[test]
    fn single_boson_pair_characters() {
        let z1 = Coset::from_lattice(make_lattice(LatticeKind::Z(1)).unwrap());
        let plus = lattice_vosa_character(&z1, None, &SignCharacter::Trivial, q(2, 1)).unwrap();
        assert_eq!(plus.low24(), Some(-1));
        assert_eq!(plus.coeff(-1, 0), CycNum::one());

        let minus = lattice_vosa_character(&z1, None, &SignCharacter::NormParity, q(2, 1)).unwrap();
        assert_eq!(minus.coeff(-1, 0), CycNum::one());
        assert_eq!(minus.coeff(11, 0), CycNum::from_integer(-2));
    }

    #[test]
    fn fermions_match_bosons_in_ns_sector() {
        for m in 1..=2usize {
            let f = fermion_character(2 * m, FermionSector::NS, false, q(4, 1)).unwrap();
            let z = Coset::from_lattice(make_lattice(LatticeKind::Z(m)).unwrap());
            let b = lattice_vosa_character(&z, None, &SignCharacter::Trivial, q(4, 1)).unwrap();
            assert_eq!(f, b, "m = {}", m);
        }

        let f24 = fermion_character(24, FermionSector::NS, false, q(2, 1)).unwrap();
        assert_eq!(f24.coeff(-12, 0), CycNum::one());
        assert_eq!(f24.coeff(0, 0), CycNum::from_integer(24));
        assert_eq!(f24.coeff(12, 0), CycNum::from_integer(276));
        assert_eq!(f24.coeff(24, 0), CycNum::from_integer(2048));
    }

    #[test]
    fn signed_ns_sector_flips_odd_levels() {
        let plus = fermion_character(2, FermionSector::NS, false, q(2, 1)).unwrap();
        let minus = fermion_character(2, FermionSector::NS, true, q(2, 1)).unwrap();
        // q^(-1/24)(1 + q^(1/2) + ...) versus q^(-1/24)(1 - q^(1/2) + ...).
        assert_eq!(plus.coeff(-1, 0), CycNum::one());
        assert_eq!(minus.coeff(-1, 0), CycNum::one());
        assert_eq!(plus.coeff(11, 0), CycNum::from_integer(2));
        assert_eq!(minus.coeff(11, 0), CycNum::from_integer(-2));
    }

    #[test]
    fn odd_fermion_counts_are_rejected() {
        let err = fermion_character(3, FermionSector::NS, false, q(2, 1)).unwrap_err();
        assert_eq!(
            err,
            CharacterError::Series(SeriesError::DenominatorOverflow)
        );
        let err = fermion_character(3, FermionSector::R, false, q(2, 1)).unwrap_err();
        assert_eq!(err, CharacterError::UnsupportedFermionSector);
    }

    #[test]
    fn ramond_sector_characters() {
        let plain = fermion_character(2, FermionSector::R, false, q(3, 1)).unwrap();
        assert_eq!(plain.low24(), Some(2));
        assert_eq!(plain.coeff(2, 0), CycNum::from_integer(2));

        for n in [2usize, 4] {
            let signed = fermion_character(n, FermionSector::R, true, q(4, 1)).unwrap();
            assert!(signed.is_empty(), "n = {}", n);
        }
    }

    #[test]
    fn string_function_specializations() {
        let f3 = n2_f(3, q(6, 1)).unwrap();
        assert!(f3.specialize_z(0).is_empty());

        let f1 = n2_f(1, q(6, 1)).unwrap();
        let s1 = f1.specialize_z(0);
        assert_eq!(s1.coeff(0, 0), CycNum::root_of_unity(2));
        assert_eq!(s1.terms().count(), 1);

        let f5 = n2_f(-1, q(6, 1)).unwrap();
        let s5 = f5.specialize_z(0);
        assert_eq!(s5.coeff(0, 0), CycNum::root_of_unity(22));
        assert_eq!(s5.terms().count(), 1);

        assert_eq!(n2_f(1, q(4, 1)).unwrap(), n2_f(7, q(4, 1)).unwrap());
    }

    #[test]
    fn flow_identity_on_level_one_characters() {
        for l in [-1i64, 1, 2] {
            assert!(spectral_flow_character_check(l, q(3, 1)).unwrap(), "l = {}", l);
        }
    }

    #[test]
    fn shifted_coset_character_leads_with_minimal_norm() {
        let d6 = make_lattice(LatticeKind::D(6)).unwrap();
        let coset = Coset::with_shift(d6, d_coset_shift(6, 1));
        let ch = lattice_vosa_character(&coset, None, &SignCharacter::Trivial, q(2, 1)).unwrap();
        // Minimal norm 3/2, central charge offset 6/24: leading q^(3/4 - 1/4).
        assert_eq!(ch.low24(), Some(12));
        assert_eq!(ch.coeff(12, 0), CycNum::from_integer(32));
    }
}
