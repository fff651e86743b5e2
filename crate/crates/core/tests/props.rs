//! Property tests: ring laws for the cyclotomic scalars and window
//! soundness for the series arithmetic.

use num_rational::Rational64;
use proptest::prelude::*;
use vosa_core::cyclotomic::{rat, CycNum};
use vosa_core::series::JacobiSeries;

type Q64 = Rational64;

fn cyc_strategy() -> impl Strategy<Value = CycNum> {
    proptest::collection::vec((-3i64..=3, 1i64..=3), 8).prop_map(|pairs| {
        let mut coords: [num_rational::BigRational; 8] = Default::default();
        for (i, (n, d)) in pairs.into_iter().enumerate() {
            coords[i] = rat(n, d);
        }
        CycNum::from_coords(coords)
    })
}

fn series_strategy() -> impl Strategy<Value = JacobiSeries> {
    proptest::collection::vec(((-12i64..36), (-6i64..=6), cyc_strategy()), 0..5).prop_map(
        |terms| JacobiSeries::from_terms_grid(36, terms),
    )
}

/// Truncates both operands to their common window before comparison.
fn eq_on_common(a: &JacobiSeries, b: &JacobiSeries) -> bool {
    let t = a.trunc24().min(b.trunc24());
    let ta = a.truncate_to(Q64::new(t, 24)).unwrap();
    let tb = b.truncate_to(Q64::new(t, 24)).unwrap();
    ta == tb
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cyc_ring_laws(a in cyc_strategy(), b in cyc_strategy(), c in cyc_strategy()) {
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
    }

    #[test]
    fn cyc_inverse_round_trip(a in cyc_strategy()) {
        if !a.is_zero() {
            let inv = a.inverse().expect("nonzero element is invertible");
            prop_assert_eq!(&a * &inv, CycNum::one());
        }
    }

    #[test]
    fn cyc_eval_is_multiplicative(a in cyc_strategy(), b in cyc_strategy()) {
        let lhs = (&a * &b).eval();
        let rhs = a.eval() * b.eval();
        prop_assert!((lhs - rhs).norm() < 1e-6 * (1.0 + a.abs_bound() * b.abs_bound()));
    }

    #[test]
    fn series_addition_laws(a in series_strategy(), b in series_strategy(), c in series_strategy()) {
        prop_assert!(eq_on_common(&a.add(&b).unwrap(), &b.add(&a).unwrap()));
        let lhs = a.add(&b).unwrap().add(&c).unwrap();
        let rhs = a.add(&b.add(&c).unwrap()).unwrap();
        prop_assert!(eq_on_common(&lhs, &rhs));
        prop_assert!(a.add(&a.neg()).unwrap().is_empty());
    }

    #[test]
    fn series_multiplication_laws(a in series_strategy(), b in series_strategy(), c in series_strategy()) {
        prop_assert!(eq_on_common(&a.mul(&b).unwrap(), &b.mul(&a).unwrap()));
        let lhs = a.mul(&b).unwrap().mul(&c).unwrap();
        let rhs = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(eq_on_common(&lhs, &rhs));
        let dist_l = a.mul(&b.add(&c).unwrap()).unwrap();
        let dist_r = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(eq_on_common(&dist_l, &dist_r));
    }

    #[test]
    fn series_product_rule_for_qderiv(a in series_strategy(), b in series_strategy()) {
        let lhs = a.mul(&b).unwrap().qderiv().unwrap();
        let rhs = a
            .qderiv().unwrap().mul(&b).unwrap()
            .add(&a.mul(&b.qderiv().unwrap()).unwrap())
            .unwrap();
        prop_assert!(eq_on_common(&lhs, &rhs));
    }

    #[test]
    fn series_u_shift_round_trip(a in series_strategy(), l in -2i64..=2) {
        // The substitution window contract needs headroom: with terms below
        // 36, |z| <= 6 and |l| <= 2, a bound of 36 + 4*2*6 = 84 guarantees
        // nothing enters the compared region from the unknown side.
        let wide = JacobiSeries::from_terms_grid(
            84,
            a.terms().map(|(&(qe, ze), c)| (qe, ze, c.clone())),
        );
        let back = wide.u_shift(l).u_shift(-l);
        let t = Q64::new(36.min(back.trunc24()), 24);
        prop_assert_eq!(wide.truncate_to(t).unwrap(), back.truncate_to(t).unwrap());
    }

    #[test]
    fn series_inverse_round_trip(a in series_strategy()) {
        // Force an invertible leading term: 1 + (a shifted into positive orders).
        let tail = a.shift(Q64::new(1, 1), 0).unwrap();
        let tail = match tail.truncate_to(Q64::new(30, 24)) {
            Ok(t) => t,
            Err(_) => return Ok(()),
        };
        let f = JacobiSeries::one(Q64::new(30, 24)).unwrap().add(&tail).unwrap();
        if let Ok(inv) = f.pow_i(-1) {
            let prod = f.mul(&inv).unwrap();
            let one = JacobiSeries::one(Q64::new(prod.trunc24(), 24)).unwrap();
            prop_assert!(eq_on_common(&prod, &one));
        }
    }
}
