//! Exact arithmetic in the cyclotomic field Q(zeta), zeta = exp(2*pi*i/24).
//!
//! The 24th cyclotomic polynomial is Phi_24(x) = x^8 - x^4 + 1, so the field
//! has degree 8 over Q and elements are stored on the power basis
//! 1, zeta, ..., zeta^7 with rational coordinates. Reduction uses
//! zeta^8 = zeta^4 - 1 and zeta^12 = -1.
//!
//! The field contains every scalar the series layer needs:
//!
//! | constant      | basis expression              |
//! |---------------|-------------------------------|
//! | i             | zeta^6                        |
//! | exp(i*pi/6)   | zeta^2                        |
//! | sqrt(2)       | zeta + zeta^3 - zeta^5        |
//! | sqrt(3)       | 2*zeta^2 - zeta^6             |
//! | exp(2*pi*i*k/24) | zeta^k (reduced)           |
//!
//! Complex conjugation is the field automorphism zeta -> zeta^23.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Rational scalar type used throughout the exact layer.
pub type Rat = BigRational;

/// Builds a rational from a numerator and denominator.
pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds an integer rational.
pub fn rat_int(num: i64) -> Rat {
    BigRational::from(BigInt::from(num))
}

/// Images of the basis powers zeta^j under zeta -> zeta^(-1), as integer
/// coordinate rows on the power basis.
const CONJ_TABLE: [[i64; 8]; 8] = [
    [1, 0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, -1],
    [0, 0, 1, 0, 0, 0, -1, 0],
    [0, 1, 0, 0, 0, -1, 0, 0],
    [1, 0, 0, 0, -1, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, 0, -1],
    [0, 0, 0, 0, 0, 0, -1, 0],
    [0, 0, 0, 0, 0, -1, 0, 0],
];

/// Element of Q(zeta_24) with coordinates on the power basis 1..zeta^7.
#[derive(Clone, PartialEq, Eq)]
pub struct CycNum {
    coords: [Rat; 8],
}

impl CycNum {
    /// The zero element.
    pub fn zero() -> Self {
        CycNum {
            coords: std::array::from_fn(|_| Rat::zero()),
        }
    }

    /// The unit element.
    pub fn one() -> Self {
        Self::from_rational(Rat::one())
    }

    /// Embeds a rational number.
    pub fn from_rational(r: Rat) -> Self {
        let mut c = Self::zero();
        c.coords[0] = r;
        c
    }

    /// Embeds an integer.
    pub fn from_integer(n: i64) -> Self {
        Self::from_rational(rat_int(n))
    }

    /// Builds the element from explicit basis coordinates.
    pub fn from_coords(coords: [Rat; 8]) -> Self {
        CycNum { coords }
    }

    /// Basis coordinates, constant first.
    pub fn coords(&self) -> &[Rat; 8] {
        &self.coords
    }

    /// The root of unity exp(2*pi*i*k/24) for any integer k.
    pub fn root_of_unity(k: i64) -> Self {
        let e = k.rem_euclid(24) as usize;
        let mut c = Self::zero();
        match e {
            0..=7 => c.coords[e] = Rat::one(),
            8..=11 => {
                c.coords[e - 4] = Rat::one();
                c.coords[e - 8] = -Rat::one();
            }
            12..=19 => c.coords[e - 12] = -Rat::one(),
            _ => {
                c.coords[e - 16] = -Rat::one();
                c.coords[e - 20] = Rat::one();
            }
        }
        c
    }

    /// The imaginary unit, i = zeta^6.
    pub fn i() -> Self {
        Self::root_of_unity(6)
    }

    /// sqrt(2) = zeta + zeta^3 - zeta^5.
    pub fn sqrt2() -> Self {
        let mut c = Self::zero();
        c.coords[1] = Rat::one();
        c.coords[3] = Rat::one();
        c.coords[5] = -Rat::one();
        c
    }

    /// sqrt(3) = 2*zeta^2 - zeta^6.
    pub fn sqrt3() -> Self {
        let mut c = Self::zero();
        c.coords[2] = rat_int(2);
        c.coords[6] = -Rat::one();
        c
    }

    /// True when every coordinate vanishes.
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// Returns the constant coordinate when the element is rational.
    pub fn as_rational(&self) -> Option<Rat> {
        if self.coords[1..].iter().all(|c| c.is_zero()) {
            Some(self.coords[0].clone())
        } else {
            None
        }
    }

    /// Multiplies by a rational scalar.
    pub fn scale(&self, s: &Rat) -> Self {
        if s.is_zero() {
            return Self::zero();
        }
        CycNum {
            coords: std::array::from_fn(|j| &self.coords[j] * s),
        }
    }

    fn mul_impl(&self, other: &Self) -> Self {
        // Rational operands only touch the constant coordinate; this path
        // covers most series coefficients.
        if let Some(r) = self.as_rational() {
            return other.scale(&r);
        }
        if let Some(r) = other.as_rational() {
            return self.scale(&r);
        }
        let mut buf: Vec<Rat> = vec![Rat::zero(); 15];
        for (ja, a) in self.coords.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (jb, b) in other.coords.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                buf[ja + jb] += a * b;
            }
        }
        // zeta^k = zeta^(k-4) - zeta^(k-8) for k >= 8; indices 10, 9, 8 are
        // revisited after the larger ones feed into them.
        for k in (8..=14).rev() {
            if buf[k].is_zero() {
                continue;
            }
            let c = std::mem::replace(&mut buf[k], Rat::zero());
            buf[k - 4] += &c;
            buf[k - 8] -= &c;
        }
        CycNum {
            coords: std::array::from_fn(|j| buf[j].clone()),
        }
    }

    /// Complex conjugation, the automorphism zeta -> zeta^23.
    pub fn conj(&self) -> Self {
        let mut out = Self::zero();
        for (j, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (t, &m) in CONJ_TABLE[j].iter().enumerate() {
                if m != 0 {
                    out.coords[t] += c * rat_int(m);
                }
            }
        }
        out
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inverse(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        // Solve M x = e_0 where M has columns self * zeta^j.
        let mut m = vec![vec![Rat::zero(); 9]; 8];
        for j in 0..8 {
            let col = self.mul_impl(&Self::root_of_unity(j as i64));
            for r in 0..8 {
                m[r][j] = col.coords[r].clone();
            }
        }
        m[0][8] = Rat::one();
        // Gaussian elimination with partial (first nonzero) pivoting.
        let mut row = 0;
        let mut pivots = [usize::MAX; 8];
        for col in 0..8 {
            let Some(p) = (row..8).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(row, p);
            let inv = m[row][col].recip();
            for t in col..9 {
                m[row][t] = &m[row][t] * &inv;
            }
            for r in 0..8 {
                if r != row && !m[r][col].is_zero() {
                    let f = m[r][col].clone();
                    for t in col..9 {
                        let sub = &m[row][t] * &f;
                        m[r][t] = &m[r][t] - sub;
                    }
                }
            }
            pivots[col] = row;
            row += 1;
        }
        if row < 8 {
            // Cannot happen in a field with a nonzero element, kept as a guard.
            return None;
        }
        let mut x = Self::zero();
        for col in 0..8 {
            x.coords[col] = m[pivots[col]][8].clone();
        }
        Some(x)
    }

    /// Floating point image under zeta -> exp(2*pi*i/24).
    pub fn eval(&self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let angle = std::f64::consts::PI * (j as f64) / 12.0;
            let v = c.to_f64().expect("coordinate fits in f64");
            acc += Complex64::new(angle.cos(), angle.sin()) * v;
        }
        acc
    }

    /// Upper bound for the absolute value: the roots of unity have modulus
    /// one, so |x| <= sum |c_j|.
    pub fn abs_bound(&self) -> f64 {
        let mut acc = 0.0f64;
        for c in &self.coords {
            if !c.is_zero() {
                acc += c.abs().to_f64().expect("coordinate fits in f64");
            }
        }
        acc * (1.0 + 1e-12)
    }
}

impl fmt::Debug for CycNum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (j, c) in self.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if j == 0 {
                write!(f, "{}", c)?;
            } else {
                write!(f, "({})*w{}", c, j)?;
            }
        }
        Ok(())
    }
}

impl Add for &CycNum {
    type Output = CycNum;
    fn add(self, rhs: &CycNum) -> CycNum {
        CycNum {
            coords: std::array::from_fn(|j| &self.coords[j] + &rhs.coords[j]),
        }
    }
}

impl Sub for &CycNum {
    type Output = CycNum;
    fn sub(self, rhs: &CycNum) -> CycNum {
        CycNum {
            coords: std::array::from_fn(|j| &self.coords[j] - &rhs.coords[j]),
        }
    }
}

impl Mul for &CycNum {
    type Output = CycNum;
    fn mul(self, rhs: &CycNum) -> CycNum {
        self.mul_impl(rhs)
    }
}

impl Neg for &CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        CycNum {
            coords: std::array::from_fn(|j| -self.coords[j].clone()),
        }
    }
}

impl Add for CycNum {
    type Output = CycNum;
    fn add(self, rhs: CycNum) -> CycNum {
        &self + &rhs
    }
}

impl Sub for CycNum {
    type Output = CycNum;
    fn sub(self, rhs: CycNum) -> CycNum {
        &self - &rhs
    }
}

impl Mul for CycNum {
    type Output = CycNum;
    fn mul(self, rhs: CycNum) -> CycNum {
        &self * &rhs
    }
}

impl Neg for CycNum {
    type Output = CycNum;
    fn neg(self) -> CycNum {
        -&self
    }
}

/// Raises an element to a non-negative integer power.
pub fn cyc_pow(base: &CycNum, mut n: u32) -> CycNum {
    let mut acc = CycNum::one();
    let mut b = base.clone();
    while n > 0 {
        if n & 1 == 1 {
            acc = &acc * &b;
        }
        b = &b * &b;
        n >>= 1;
    }
    acc
}
