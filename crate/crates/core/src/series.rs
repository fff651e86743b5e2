//! Bivariate series in q and z with cyclotomic coefficients.
//!
//! A `JacobiSeries` models a finite piece of a sum
//!
//! ```text
//!   sum_{n, m} c_{n,m} q^(n/24) z^(m/6),   c_{n,m} in Q(zeta_24),
//! ```
//!
//! with q = exp(2*pi*i*tau) and z = exp(2*pi*i*u). Exponents are stored on
//! fixed grids: q-exponents in units of 1/24 (the finest power an eta
//! prefactor can produce here) and z-exponents in units of 1/6 (the finest
//! charge a marking can produce here). Terms are kept in a sorted map and a
//! term-exclusive truncation bound `trunc24` tracks through every operation,
//! so a series always knows below which q-power it is complete.
//!
//! | operation    | truncation rule                                        |
//! |--------------|--------------------------------------------------------|
//! | add          | min of the two bounds                                  |
//! | mul          | min(t_a + low_b, t_b + low_a)                          |
//! | pow(-1)      | t - 2 * low, leading term must be a single monomial    |
//! | q d/dq       | unchanged                                              |
//! | z -> z q^(l/2) | see `u_shift`                                        |
//!
//! Numerical evaluation sums the stored terms at a point of the upper half
//! plane and reports a certified tail bound from a geometric majorant of the
//! coefficient growth.

use crate::cyclotomic::{rat, CycNum, Rat};
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

/// Exponent and truncation arguments use small rationals.
pub type Q64 = Rational64;

/// Finest q-exponent grid: multiples of 1/24.
pub const QGRID: i64 = 24;
/// Finest z-exponent grid: multiples of 1/6.
pub const ZSCALE: i64 = 6;

/// Errors surfaced by the series layer.
#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum SeriesError {
    /// An exponent left the 1/24 grid.
    #[error("denominator overflow")]
    DenominatorOverflow,
    /// Inversion needs a unique leading monomial.
    #[error("non-invertible series")]
    NonInvertibleSeries,
    /// Eta is only provided at the scales 1, 2, 3 (and rejects 1/2 with a
    /// denominator overflow, since q^(1/48) leaves the grid).
    #[error("unsupported eta scale")]
    UnsupportedEtaScale,
    /// A certified tail bound exceeded the requested tolerance.
    #[error("insufficient truncation")]
    InsufficientTruncation,
}

/// Converts a rational q-exponent to the 1/24 grid.
pub fn q_to_grid(x: Q64) -> Result<i64, SeriesError> {
    let scaled = x * Q64::from_integer(QGRID);
    if scaled.is_integer() {
        Ok(scaled.to_integer())
    } else {
        Err(SeriesError::DenominatorOverflow)
    }
}

/// Truncated series in q^(1/24) and z^(1/6) over Q(zeta_24).
#[derive(Clone, PartialEq, Eq)]
pub struct JacobiSeries {
    /// Map (q-exponent in 1/24 units, z-exponent in 1/6 units) -> coefficient.
    terms: BTreeMap<(i64, i64), CycNum>,
    /// Exclusive completeness bound: all terms satisfy qe < trunc24.
    trunc24: i64,
}

/// Arithmetic operations dispatched by [`JacobiSeries::series_arith`].
pub enum SeriesOp<'a> {
    Add(&'a JacobiSeries),
    Mul(&'a JacobiSeries),
    /// A non-negative power, or -1 for the inverse.
    Pow(i64),
    /// The operator q d/dq.
    QDeriv,
    Scalar(&'a CycNum),
}

impl JacobiSeries {
    /// The zero series, complete below `trunc`.
    pub fn zero(trunc: Q64) -> Result<Self, SeriesError> {
        Ok(JacobiSeries {
            terms: BTreeMap::new(),
            trunc24: q_to_grid(trunc)?,
        })
    }

    /// The constant one, complete below `trunc`.
    pub fn one(trunc: Q64) -> Result<Self, SeriesError> {
        Self::monomial(Q64::zero(), 0, CycNum::one(), trunc)
    }

    /// A single term c q^qexp z^(z_sixths/6).
    pub fn monomial(qexp: Q64, z_sixths: i64, c: CycNum, trunc: Q64) -> Result<Self, SeriesError> {
        let mut s = Self::zero(trunc)?;
        let qe = q_to_grid(qexp)?;
        if !c.is_zero() && qe < s.trunc24 {
            s.terms.insert((qe, z_sixths), c);
        }
        Ok(s)
    }

    /// Builds a series from (q-exponent, z-exponent in sixths, coefficient)
    /// triples; coefficients at equal exponents accumulate.
    pub fn from_terms<I>(trunc: Q64, iter: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (Q64, i64, CycNum)>,
    {
        let mut s = Self::zero(trunc)?;
        for (qexp, ze, c) in iter {
            let qe = q_to_grid(qexp)?;
            if qe >= s.trunc24 || c.is_zero() {
                continue;
            }
            let slot = s.terms.entry((qe, ze)).or_insert_with(CycNum::zero);
            *slot = &*slot + &c;
            if slot.is_zero() {
                s.terms.remove(&(qe, ze));
            }
        }
        Ok(s)
    }

    /// Grid-level constructor; exponents already in 1/24 and 1/6 units.
    pub fn from_terms_grid<I>(trunc24: i64, iter: I) -> Self
    where
        I: IntoIterator<Item = (i64, i64, CycNum)>,
    {
        let mut terms = BTreeMap::new();
        for (qe, ze, c) in iter {
            if qe >= trunc24 || c.is_zero() {
                continue;
            }
            let slot: &mut CycNum = terms.entry((qe, ze)).or_insert_with(CycNum::zero);
            *slot = &*slot + &c;
            if slot.is_zero() {
                terms.remove(&(qe, ze));
            }
        }
        JacobiSeries { terms, trunc24 }
    }

    /// Exclusive truncation bound in 1/24 units.
    pub fn trunc24(&self) -> i64 {
        self.trunc24
    }

    /// Smallest stored q-exponent in 1/24 units.
    pub fn low24(&self) -> Option<i64> {
        self.terms.keys().next().map(|&(qe, _)| qe)
    }

    /// Denominator of the q-exponent grid actually used: the least d | 24
    /// with all exponents in (24/d) Z.
    pub fn qden(&self) -> i64 {
        let g = self
            .terms
            .keys()
            .fold(QGRID, |acc, &(qe, _)| acc.gcd(&qe.abs().max(0)).max(1));
        let g = if self.terms.is_empty() { QGRID } else { g };
        QGRID / g
    }

    /// True when no terms are stored.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sorted term iterator: ((qe24, ze6), coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (&(i64, i64), &CycNum)> {
        self.terms.iter()
    }

    /// Coefficient at q-exponent qe/24, z-exponent ze/6 (zero if absent).
    pub fn coeff(&self, qe24: i64, ze: i64) -> CycNum {
        self.terms
            .get(&(qe24, ze))
            .cloned()
            .unwrap_or_else(CycNum::zero)
    }

    /// Coefficient addressed by a rational q-exponent.
    pub fn coeff_q(&self, qexp: Q64, ze: i64) -> CycNum {
        match q_to_grid(qexp) {
            Ok(qe) => self.coeff(qe, ze),
            Err(_) => CycNum::zero(),
        }
    }

    /// Dispatcher for the arithmetic kernel.
    pub fn series_arith(&self, op: SeriesOp<'_>) -> Result<JacobiSeries, SeriesError> {
        match op {
            SeriesOp::Add(rhs) => self.add(rhs),
            SeriesOp::Mul(rhs) => self.mul(rhs),
            SeriesOp::Pow(n) => self.pow(n),
            SeriesOp::QDeriv => self.qderiv(),
            SeriesOp::Scalar(c) => Ok(self.scalar(c)),
        }
    }

    /// Sum; complete below the smaller bound.
    pub fn add(&self, rhs: &JacobiSeries) -> Result<JacobiSeries, SeriesError> {
        let trunc24 = self.trunc24.min(rhs.trunc24);
        let mut out = JacobiSeries {
            terms: BTreeMap::new(),
            trunc24,
        };
        for (&k, c) in self.terms.iter().chain(rhs.terms.iter()) {
            if k.0 >= trunc24 {
                continue;
            }
            let slot = out.terms.entry(k).or_insert_with(CycNum::zero);
            *slot = &*slot + c;
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    /// Difference.
    pub fn sub(&self, rhs: &JacobiSeries) -> Result<JacobiSeries, SeriesError> {
        self.add(&rhs.neg())
    }

    /// Negation.
    pub fn neg(&self) -> JacobiSeries {
        JacobiSeries {
            terms: self.terms.iter().map(|(&k, c)| (k, -c)).collect(),
            trunc24: self.trunc24,
        }
    }

    fn low_or_trunc(&self) -> i64 {
        self.low24().unwrap_or(self.trunc24)
    }

    /// Product. The result is complete below
    /// min(t_a + low_b, t_b + low_a): a missing term of one factor beyond its
    /// bound, times the lowest term of the other, is the first product term
    /// that could be affected.
    pub fn mul(&self, rhs: &JacobiSeries) -> Result<JacobiSeries, SeriesError> {
        let trunc24 = (self.trunc24 + rhs.low_or_trunc()).min(rhs.trunc24 + self.low_or_trunc());
        let mut out = JacobiSeries {
            terms: BTreeMap::new(),
            trunc24,
        };
        for (&(qa, za), ca) in &self.terms {
            for (&(qb, zb), cb) in &rhs.terms {
                let qe = qa + qb;
                if qe >= trunc24 {
                    continue;
                }
                let prod = ca * cb;
                if prod.is_zero() {
                    continue;
                }
                let slot = out.terms.entry((qe, za + zb)).or_insert_with(CycNum::zero);
                *slot = &*slot + &prod;
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    /// Scalar multiple.
    pub fn scalar(&self, c: &CycNum) -> JacobiSeries {
        if c.is_zero() {
            return JacobiSeries {
                terms: BTreeMap::new(),
                trunc24: self.trunc24,
            };
        }
        let mut terms = BTreeMap::new();
        for (&k, v) in &self.terms {
            let p = v * c;
            if !p.is_zero() {
                terms.insert(k, p);
            }
        }
        JacobiSeries {
            terms,
            trunc24: self.trunc24,
        }
    }

    /// Rational scalar multiple.
    pub fn scalar_rat(&self, r: &Rat) -> JacobiSeries {
        self.scalar(&CycNum::from_rational(r.clone()))
    }

    /// Non-negative power, or -1 for the inverse.
    pub fn pow(&self, n: i64) -> Result<JacobiSeries, SeriesError> {
        if n == -1 {
            return self.inverse();
        }
        assert!(n >= 0, "pow exponent must be >= -1");
        let mut acc = JacobiSeries::one(Q64::new(self.trunc24, QGRID))?;
        // Repeated multiplication keeps the truncation window maximal; the
        // exponents here are small.
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Any integer power, routed through the inverse for negative n.
    pub fn pow_i(&self, n: i64) -> Result<JacobiSeries, SeriesError> {
        if n >= 0 {
            self.pow(n)
        } else {
            self.inverse()?.pow(-n)
        }
    }

    fn inverse(&self) -> Result<JacobiSeries, SeriesError> {
        let Some(low) = self.low24() else {
            return Err(SeriesError::NonInvertibleSeries);
        };
        let leading: Vec<_> = self
            .terms
            .iter()
            .take_while(|(&(qe, _), _)| qe == low)
            .collect();
        if leading.len() != 1 {
            return Err(SeriesError::NonInvertibleSeries);
        }
        let (&(qe0, ze0), c0) = leading[0];
        let c0inv = c0.inverse().expect("stored coefficients are nonzero");
        // self = c0 q^(qe0/24) z^(ze0/6) (1 + w), with w supported strictly
        // above q^0 after the shift.
        let mut unit = self.shift_grid(-qe0, -ze0).scalar(&c0inv);
        unit.terms.remove(&(0, 0));
        let neg_w = unit.neg();
        let window = self.trunc24 - qe0;
        let mut acc = JacobiSeries::from_terms_grid(window, [(0, 0, CycNum::one())]);
        let mut pw = acc.clone();
        loop {
            pw = pw.mul(&neg_w)?;
            pw.trunc24 = window;
            if pw.terms.is_empty() {
                break;
            }
            acc = acc.add(&pw)?;
            acc.trunc24 = window;
        }
        Ok(acc.scalar(&c0inv).shift_grid(-qe0, -ze0))
    }

    /// The operator q d/dq: multiplies each term by its q-exponent.
    pub fn qderiv(&self) -> Result<JacobiSeries, SeriesError> {
        let mut terms = BTreeMap::new();
        for (&(qe, ze), c) in &self.terms {
            let scaled = c.scale(&rat(qe, QGRID));
            if !scaled.is_zero() {
                terms.insert((qe, ze), scaled);
            }
        }
        Ok(JacobiSeries {
            terms,
            trunc24: self.trunc24,
        })
    }

    /// Shift by q^dq z^(dz/6); the truncation bound moves with the terms.
    pub fn shift(&self, dq: Q64, dz_sixths: i64) -> Result<JacobiSeries, SeriesError> {
        Ok(self.shift_grid(q_to_grid(dq)?, dz_sixths))
    }

    fn shift_grid(&self, dq24: i64, dz6: i64) -> JacobiSeries {
        JacobiSeries {
            terms: self
                .terms
                .iter()
                .map(|(&(qe, ze), c)| ((qe + dq24, ze + dz6), c.clone()))
                .collect(),
            trunc24: self.trunc24 + dq24,
        }
    }

    /// The substitution z -> z q^(l/2): a term z^(m) picks up q^(l*m/2),
    /// i.e. qe24 increases by 2*l*ze. The new bound assumes terms beyond the
    /// old bound carry z-exponents within the stored extremes, which holds
    /// for the theta-type series this is applied to; comparisons downstream
    /// are against independently built targets, so a violation would surface
    /// as a mismatch rather than stay silent.
    pub fn u_shift(&self, l: i64) -> JacobiSeries {
        let zmin = self.terms.keys().map(|&(_, ze)| ze).min().unwrap_or(0).min(0);
        let zmax = self.terms.keys().map(|&(_, ze)| ze).max().unwrap_or(0).max(0);
        let margin = if l >= 0 { 2 * l * zmin } else { 2 * l * zmax };
        let trunc24 = self.trunc24 + margin;
        let mut terms = BTreeMap::new();
        for (&(qe, ze), c) in &self.terms {
            let qe2 = qe + 2 * l * ze;
            if qe2 < trunc24 {
                terms.insert((qe2, ze), c.clone());
            }
        }
        JacobiSeries { terms, trunc24 }
    }

    /// Specializes z to the root of unity exp(2*pi*i*t24/24). Every term must
    /// land on the zeta_24 grid, i.e. 6 | t24 * ze.
    pub fn specialize_z(&self, t24: i64) -> JacobiSeries {
        let mut terms: BTreeMap<(i64, i64), CycNum> = BTreeMap::new();
        for (&(qe, ze), c) in &self.terms {
            let e = t24 * ze;
            assert!(
                e % ZSCALE == 0,
                "specialization point 2*pi*{}/24 incompatible with z-exponent {}/6",
                t24,
                ze
            );
            let twisted = c * &CycNum::root_of_unity(e / ZSCALE);
            let slot = terms.entry((qe, 0)).or_insert_with(CycNum::zero);
            *slot = &*slot + &twisted;
        }
        terms.retain(|_, c| !c.is_zero());
        JacobiSeries {
            terms,
            trunc24: self.trunc24,
        }
    }

    /// Lowers the truncation bound and drops terms beyond it.
    pub fn truncate_to(&self, trunc: Q64) -> Result<JacobiSeries, SeriesError> {
        let t24 = q_to_grid(trunc)?;
        assert!(t24 <= self.trunc24, "truncation can only shrink");
        let mut s = self.clone();
        s.trunc24 = t24;
        s.terms.retain(|&(qe, _), _| qe < t24);
        Ok(s)
    }

    /// Serializes to the canonical JSON form: exponents as reduced [num, den]
    /// pairs, coefficients as eight such pairs, terms sorted by (q, z).
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct TermJson {
            q: [i64; 2],
            z: i64,
            c: [[i64; 2]; 8],
        }
        #[derive(Serialize)]
        struct SeriesJson {
            qden: i64,
            trunc: [i64; 2],
            terms: Vec<TermJson>,
        }
        fn frac(num: i64, den: i64) -> [i64; 2] {
            let g = num.gcd(&den).max(1);
            [num / g, den / g]
        }
        fn big_frac(r: &Rat) -> [i64; 2] {
            [
                r.numer().to_i64().expect("coefficient fits i64"),
                r.denom().to_i64().expect("coefficient fits i64"),
            ]
        }
        let doc = SeriesJson {
            qden: self.qden(),
            trunc: frac(self.trunc24, QGRID),
            terms: self
                .terms
                .iter()
                .map(|(&(qe, ze), c)| TermJson {
                    q: frac(qe, QGRID),
                    z: ze,
                    c: std::array::from_fn(|j| big_frac(&c.coords()[j])),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("series serialization")
    }

    /// Numerical evaluation at a point of the upper half plane.
    ///
    /// With the flag set, each coefficient is complex-conjugated before the
    /// sum; passing the point (-conj(u), -conj(tau)) then realizes the value
    /// of an antiholomorphic factor at (u, tau).
    pub fn eval_numeric(
        &self,
        p: &EvalPoint,
        conjugate_coeffs: bool,
        tol: f64,
    ) -> Result<EvalResult, SeriesError> {
        use std::f64::consts::PI;
        assert!(
            p.tau.im >= 0.5 - 1e-12,
            "evaluation requires Im(tau) >= 0.5"
        );
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        let mut value = Complex64::new(0.0, 0.0);
        let mut amax = 0.0f64;
        let mut slope = 0.0f64;
        for (&(qe, ze), c) in &self.terms {
            let expo = p.tau * (qe as f64 / QGRID as f64) + p.u * (ze as f64 / ZSCALE as f64);
            let cv = if conjugate_coeffs {
                c.eval().conj()
            } else {
                c.eval()
            };
            value += cv * (two_pi_i * expo).exp();
            // Majorant data: |c_n| <= (A/4) * exp(pi*n/24), and z-exponents
            // grow at most like slope * qe.
            amax = amax.max(c.abs_bound() * (-PI * qe as f64 / QGRID as f64).exp());
            slope = slope.max(ze.abs() as f64 / (qe.max(QGRID) as f64));
        }
        let a = 4.0 * amax;
        let g = (PI / QGRID as f64 - 2.0 * PI * p.tau.im / QGRID as f64
            + 2.0 * PI * p.u.im.abs() * slope / ZSCALE as f64)
            .exp();
        let tail_bound = if self.terms.is_empty() {
            0.0
        } else if g >= 1.0 {
            f64::INFINITY
        } else {
            a * g.powi(self.trunc24 as i32) / (1.0 - g)
        };
        if tail_bound > tol {
            return Err(SeriesError::InsufficientTruncation);
        }
        Ok(EvalResult { value, tail_bound })
    }
}

impl fmt::Debug for JacobiSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            write!(f, "0")?;
        }
        for (i, (&(qe, ze), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{:?}]", c)?;
            if qe != 0 {
                write!(f, " q^({}/24)", qe)?;
            }
            if ze != 0 {
                write!(f, " z^({}/6)", ze)?;
            }
        }
        write!(f, " + O(q^({}/24))", self.trunc24)
    }
}

/// Point of evaluation: u is the z-variable exponent, tau the modulus.
#[derive(Debug, Clone, Copy)]
pub struct EvalPoint {
    pub u: Complex64,
    pub tau: Complex64,
}

impl EvalPoint {
    /// Point with u = 0.
    pub fn tau_only(tau: Complex64) -> Self {
        EvalPoint {
            u: Complex64::new(0.0, 0.0),
            tau,
        }
    }
}

/// Value and certified tail bound from `eval_numeric`.
#[derive(Debug, Clone, Copy)]
pub struct EvalResult {
    pub value: Complex64,
    pub tail_bound: f64,
}

/// Dedekind eta at scale r in {1, 2, 3}:
/// eta(r tau) = q^(r/24) prod_{n >= 1} (1 - q^(r n)).
///
/// Scale 1/2 would need q^(1/48) and is rejected with a denominator
/// overflow; other scales are unsupported.
pub fn eta_scaled(r: Q64, trunc: Q64) -> Result<JacobiSeries, SeriesError> {
    let t24 = q_to_grid(trunc)?;
    if r == Q64::new(1, 2) {
        return Err(SeriesError::DenominatorOverflow);
    }
    if !r.is_integer() || r.to_integer() < 1 || r.to_integer() > 3 {
        return Err(SeriesError::UnsupportedEtaScale);
    }
    let rn = r.to_integer();
    let window = t24 - rn;
    let mut acc = JacobiSeries::from_terms_grid(window, [(0, 0, CycNum::one())]);
    let mut n = 1i64;
    while QGRID * rn * n < window {
        let factor = JacobiSeries::from_terms_grid(
            window,
            [
                (0, 0, CycNum::one()),
                (QGRID * rn * n, 0, CycNum::from_integer(-1)),
            ],
        );
        acc = acc.mul(&factor)?;
        acc.trunc24 = window;
        n += 1;
    }
    Ok(acc.shift(Q64::new(rn, QGRID), 0)?)
}

/// The quasimodular Eisenstein series E_2 = 1 - 24 sum sigma_1(n) q^n.
pub fn eisenstein_e2(trunc: Q64) -> Result<JacobiSeries, SeriesError> {
    let t24 = q_to_grid(trunc)?;
    let mut terms = vec![(0i64, 0i64, CycNum::one())];
    let mut n = 1i64;
    while QGRID * n < t24 {
        let sigma: i64 = (1..=n).filter(|d| n % d == 0).sum();
        terms.push((QGRID * n, 0, CycNum::from_integer(-24 * sigma)));
        n += 1;
    }
    Ok(JacobiSeries::from_terms_grid(t24, terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    fn q(n: i64, d: i64) -> Q64 {
        Q64::new(n, d)
    }

    #[test]
    fn eta_cube_of_powers() {
        // eta(tau)^24 = q - 24 q^2 + 252 q^3 - 1472 q^4 + ...
        let eta = eta_scaled(Q64::one(), q(6, 1)).unwrap();
        let e24 = eta.pow(24).unwrap();
        let expect = [(1, 1i64), (2, -24), (3, 252), (4, -1472), (5, 4830)];
        for (n, c) in expect {
            assert_eq!(
                e24.coeff(QGRID * n, 0),
                CycNum::from_integer(c),
                "coefficient of q^{}",
                n
            );
        }
    }

    #[test]
    fn eta_rejects_half_and_odd_scales() {
        assert_eq!(
            eta_scaled(q(1, 2), q(4, 1)).unwrap_err(),
            SeriesError::DenominatorOverflow
        );
        assert_eq!(
            eta_scaled(q(5, 1), q(4, 1)).unwrap_err(),
            SeriesError::UnsupportedEtaScale
        );
    }

    #[test]
    fn e2_coefficients() {
        let e2 = eisenstein_e2(q(5, 1)).unwrap();
        assert_eq!(e2.coeff(0, 0), CycNum::one());
        assert_eq!(e2.coeff(24, 0), CycNum::from_integer(-24));
        assert_eq!(e2.coeff(48, 0), CycNum::from_integer(-72));
        assert_eq!(e2.coeff(72, 0), CycNum::from_integer(-96));
        assert_eq!(e2.coeff(96, 0), CycNum::from_integer(-168));
    }

    #[test]
    fn qderiv_on_character_shape() {
        let s = JacobiSeries::from_terms(
            q(1, 1),
            [
                (q(-1, 2), 0, CycNum::one()),
                (q(0, 1), 0, CycNum::from_integer(24)),
                (q(1, 2), 0, CycNum::from_integer(276)),
            ],
        )
        .unwrap();
        let d = s.qderiv().unwrap();
        assert_eq!(d.coeff(-12, 0), CycNum::from_rational(rat(-1, 2)));
        assert_eq!(d.coeff(0, 0), CycNum::zero());
        assert_eq!(d.coeff(12, 0), CycNum::from_integer(138));
    }

    #[test]
    fn inverse_round_trip_and_failure() {
        let eta = eta_scaled(Q64::one(), q(6, 1)).unwrap();
        let inv = eta.pow(-1).unwrap();
        let prod = eta.mul(&inv).unwrap();
        assert_eq!(prod.coeff(0, 0), CycNum::one());
        assert_eq!(prod.terms().count(), 1, "eta * eta^-1 = 1: {:?}", prod);

        // Two monomials at the same leading q-exponent are not invertible.
        let bad = JacobiSeries::from_terms(
            q(3, 1),
            [(q(0, 1), 6, CycNum::one()), (q(0, 1), -6, CycNum::one())],
        )
        .unwrap();
        assert_eq!(bad.pow(-1).unwrap_err(), SeriesError::NonInvertibleSeries);
    }

    #[test]
    fn truncation_bookkeeping() {
        let a = JacobiSeries::from_terms(q(2, 1), [(q(1, 2), 0, CycNum::one())]).unwrap();
        let b = JacobiSeries::from_terms(q(3, 1), [(q(1, 1), 0, CycNum::one())]).unwrap();
        let m = a.mul(&b).unwrap();
        // min(48 + 24, 72 + 12) = 72.
        assert_eq!(m.trunc24(), 72);
        let s = a.add(&b).unwrap();
        assert_eq!(s.trunc24(), 48);
    }

    #[test]
    fn qden_reflects_grid() {
        let a = JacobiSeries::from_terms(q(2, 1), [(q(1, 2), 0, CycNum::one())]).unwrap();
        assert_eq!(a.qden(), 2);
        let b = JacobiSeries::from_terms(q(2, 1), [(q(1, 3), 0, CycNum::one())]).unwrap();
        assert_eq!(b.qden(), 3);
        let c = JacobiSeries::from_terms(q(2, 1), [(q(1, 1), 0, CycNum::one())]).unwrap();
        assert_eq!(c.qden(), 1);
    }

    #[test]
    fn u_shift_moves_charges_into_q() {
        // z + z^-1 under z -> z q^(1/2) becomes z q^(1/2) + z^-1 q^(-1/2).
        let s = JacobiSeries::from_terms(
            q(2, 1),
            [(q(0, 1), 6, CycNum::one()), (q(0, 1), -6, CycNum::one())],
        )
        .unwrap();
        let t = s.u_shift(1);
        assert_eq!(t.coeff(12, 6), CycNum::one());
        assert_eq!(t.coeff(-12, -6), CycNum::one());
    }

    #[test]
    fn specialization_at_minus_one() {
        // z + z^-1 at z = -1 (t24 = 12) gives -2.
        let s = JacobiSeries::from_terms(
            q(2, 1),
            [(q(0, 1), 6, CycNum::one()), (q(0, 1), -6, CycNum::one())],
        )
        .unwrap();
        let v = s.specialize_z(12);
        assert_eq!(v.coeff(0, 0), CycNum::from_integer(-2));
    }

    #[test]
    fn json_shape_is_canonical() {
        let s = JacobiSeries::from_terms(
            q(3, 1),
            [(q(-1, 2), 0, CycNum::one()), (q(0, 1), 3, CycNum::i())],
        )
        .unwrap();
        assert_eq!(
            s.to_json(),
            "{\"qden\":2,\"trunc\":[3,1],\"terms\":[{\"q\":[-1,2],\"z\":0,\
             \"c\":[[1,1],[0,1],[0,1],[0,1],[0,1],[0,1],[0,1],[0,1]]},\
             {\"q\":[0,1],\"z\":3,\"c\":[[0,1],[0,1],[0,1],[0,1],[0,1],[0,1],[1,1],[0,1]]}]}"
        );
    }

    #[test]
    fn eval_monomial_and_eta_at_i() {
        let tau_i = Complex64::new(0.0, 1.0);
        // An order 2 window cannot certify 1e-6; ask only for the value.
        let half = JacobiSeries::from_terms(q(2, 1), [(q(1, 2), 0, CycNum::one())]).unwrap();
        let r = half
            .eval_numeric(&EvalPoint::tau_only(tau_i), false, 1.0)
            .unwrap();
        assert!((r.value.re - (-std::f64::consts::PI).exp()).abs() < 1e-12);
        assert!(r.value.im.abs() < 1e-14);

        // eta(i) = Gamma(1/4) / (2 pi^(3/4)).
        let eta = eta_scaled(Q64::one(), q(6, 1)).unwrap();
        let v = eta
            .eval_numeric(&EvalPoint::tau_only(tau_i), false, 1e-6)
            .unwrap();
        assert!((v.value.re - 0.768_225_422_326_056_6).abs() < 1e-9);
        assert!(v.value.im.abs() < 1e-12);
        assert!(v.tail_bound < 1e-6);
    }

    #[test]
    fn eval_tail_sandwich_at_two_orders() {
        // Doubling the order changes the value by less than the coarse tail
        // bound, at five fixed points with Im(tau) >= 0.8.
        let pts = [
            Complex64::new(0.13, 0.85),
            Complex64::new(-0.41, 0.92),
            Complex64::new(0.27, 1.05),
            Complex64::new(-0.08, 0.8),
            Complex64::new(0.49, 1.31),
        ];
        let rich = |order: i64| {
            eta_scaled(Q64::one(), q(order, 1))
                .unwrap()
                .pow_i(-12)
                .unwrap()
        };
        let coarse = rich(8);
        let fine = rich(16);
        for tau in pts {
            let p = EvalPoint::tau_only(tau);
            let a = coarse.eval_numeric(&p, false, 1.0).unwrap();
            let b = fine.eval_numeric(&p, false, 1.0).unwrap();
            assert!(
                (a.value - b.value).norm() <= a.tail_bound + b.tail_bound,
                "tau = {}: delta {} vs bound {}",
                tau,
                (a.value - b.value).norm(),
                a.tail_bound + b.tail_bound
            );
        }
    }

    #[test]
    fn conjugated_evaluation_matches_manual_conjugate() {
        // For a series with real exponents data, evaluating with conjugated
        // coefficients at (-conj u, -conj tau) equals the conjugate of the
        // plain value at (u, tau).
        let s = JacobiSeries::from_terms(
            q(3, 1),
            [
                (q(0, 1), 6, CycNum::i()),
                (q(1, 2), -6, CycNum::sqrt2()),
                (q(1, 1), 0, CycNum::root_of_unity(5)),
            ],
        )
        .unwrap();
        let u = Complex64::new(0.21, 0.0);
        let tau = Complex64::new(0.3, 0.9);
        let p = EvalPoint { u, tau };
        let mirrored = EvalPoint {
            u: -u.conj(),
            tau: -tau.conj(),
        };
        let plain = s.eval_numeric(&p, false, 1.0).unwrap().value;
        let anti = s.eval_numeric(&mirrored, true, 1.0).unwrap().value;
        assert!((anti - plain.conj()).norm() < 1e-12);
    }
}
