//! Rational lattices, cosets, markings, theta series and glue groups.
//!
//! A lattice is stored as a rational basis (rows) inside an ambient
//! rational inner product space with the standard dot product. Cosets carry
//! an extra shift vector. Theta series attach to a coset a Jacobi-type
//! series
//!
//!   theta(q, z) = sum over coset vectors v of  s(v) q^(rho v^2 / 2) z^(v.m)
//!
//! where m is an optional marking vector (elliptic variable direction),
//! s is a sign character and rho in {1, 1/2} is an overall exponent scale
//! used by twisted free fermion sectors.
//!
//! Built-in frames:
//!
//! | kind       | ambient | description                                  |
//! |------------|---------|----------------------------------------------|
//! | Z^n        | n       | standard cubic lattice                       |
//! | D_n        | n       | integer vectors with even coordinate sum     |
//! | D_n^+      | n       | D_n glued with the half vector, 4 divides n  |
//! | A_1^n      | 2n      | n orthogonal roots e_(2i) + e_(2i+1)         |
//! | sqrt3 Z^n  | 3n      | n orthogonal norm 3 vectors (1,1,1)          |
//! | E_8        | 8       | D_8^+                                        |
//!
//! Short vector enumeration runs a floating point Cholesky guided search
//! with widened integer bounds and accepts each candidate by an exact
//! rational norm computation, so results carry no rounding risk.

use crate::cyclotomic::{rat, rat_int, CycNum, Rat};
use crate::series::{q_to_grid, JacobiSeries, Q64, SeriesError, QGRID};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from lattice constructions and theta series.
#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum LatticeError {
    #[error("not integral")]
    NotIntegral,
    #[error("incompatible marking")]
    IncompatibleMarking,
    #[error("not a sublattice")]
    NotASublattice,
    #[error("discriminant too large")]
    DiscriminantTooLarge,
    #[error("glue enumeration incomplete")]
    GlueIncomplete,
    #[error(transparent)]
    Series(#[from] SeriesError),
}

/// Dot product of two rational vectors of equal length.
pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of two rational vectors.
pub fn vec_add(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Difference of two rational vectors.
pub fn vec_sub(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Scales a rational vector.
pub fn vec_scale(a: &[Rat], s: &Rat) -> Vec<Rat> {
    a.iter().map(|x| x * s).collect()
}

/// Solves M x = b for square rational M by Gaussian elimination.
/// Returns None when M is singular.
fn solve_square(m: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = m.len();
    assert_eq!(b.len(), n);
    let mut aug: Vec<Vec<Rat>> = m
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, pivot);
        let inv = aug[col][col].recip();
        for x in aug[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !aug[r][col].is_zero() {
                let f = aug[r][col].clone();
                for c in col..=n {
                    let delta = &f * &aug[col][c];
                    aug[r][c] = &aug[r][c] - &delta;
                }
            }
        }
    }
    Some(aug.into_iter().map(|row| row[n].clone()).collect())
}

/// Inverse of a square rational matrix, None when singular.
fn invert_square(m: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let n = m.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: Vec<Rat> = (0..n)
            .map(|i| if i == j { Rat::one() } else { Rat::zero() })
            .collect();
        cols.push(solve_square(m, &e)?);
    }
    // cols[j] is the j-th column of the inverse.
    Some((0..n).map(|i| (0..n).map(|j| cols[j][i].clone()).collect()).collect())
}

/// Determinant of a square rational matrix.
fn det_square(m: &[Vec<Rat>]) -> Rat {
    let n = m.len();
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let mut det = Rat::one();
    for col in 0..n {
        let pivot = match (col..n).find(|&r| !a[r][col].is_zero()) {
            Some(p) => p,
            None => return Rat::zero(),
        };
        if pivot != col {
            a.swap(col, pivot);
            det = -det;
        }
        det = &det * &a[col][col];
        let inv = a[col][col].recip();
        for r in (col + 1)..n {
            if !a[r][col].is_zero() {
                let f = &a[r][col] * &inv;
                for c in col..n {
                    let delta = &f * &a[col][c];
                    a[r][c] = &a[r][c] - &delta;
                }
            }
        }
    }
    det
}

/// A full-rank-by-rows rational lattice in an ambient dot product space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    basis: Vec<Vec<Rat>>,
    gram: Vec<Vec<Rat>>,
}

impl Lattice {
    /// Builds a lattice from independent basis rows.
    pub fn from_rows(basis: Vec<Vec<Rat>>) -> Self {
        assert!(!basis.is_empty());
        let m = basis[0].len();
        assert!(basis.iter().all(|r| r.len() == m));
        let gram: Vec<Vec<Rat>> = basis
            .iter()
            .map(|a| basis.iter().map(|b| dot(a, b)).collect())
            .collect();
        assert!(!det_square(&gram).is_zero(), "basis rows must be independent");
        Lattice { basis, gram }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis[0].len()
    }

    pub fn basis(&self) -> &[Vec<Rat>] {
        &self.basis
    }

    pub fn gram(&self) -> &[Vec<Rat>] {
        &self.gram
    }

    /// Determinant of the Gram matrix.
    pub fn det(&self) -> Rat {
        det_square(&self.gram)
    }

    /// Basis coordinates of an ambient vector lying in the rational span,
    /// None when the vector has a component off the span.
    pub fn coordinates(&self, v: &[Rat]) -> Option<Vec<Rat>> {
        let rhs: Vec<Rat> = self.basis.iter().map(|b| dot(b, v)).collect();
        let c = solve_square(&self.gram, &rhs)?;
        let back: Vec<Rat> = (0..self.ambient_dim())
            .map(|j| c.iter().zip(&self.basis).map(|(ci, bi)| ci * &bi[j]).sum())
            .collect();
        if back == v { Some(c) } else { None }
    }

    /// True when v is an integer combination of basis rows.
    pub fn contains(&self, v: &[Rat]) -> bool {
        match self.coordinates(v) {
            Some(c) => c.iter().all(|x| x.is_integer()),
            None => false,
        }
    }

    /// Rows of the dual basis (inverse Gram times basis).
    pub fn dual_basis(&self) -> Vec<Vec<Rat>> {
        let ginv = invert_square(&self.gram).expect("gram is invertible");
        ginv.iter()
            .map(|row| {
                (0..self.ambient_dim())
                    .map(|j| row.iter().zip(&self.basis).map(|(c, b)| c * &b[j]).sum())
                    .collect()
            })
            .collect()
    }

    /// Orthogonal direct sum; ambient spaces are concatenated.
    pub fn direct_sum(&self, other: &Lattice) -> Lattice {
        let (ma, mb) = (self.ambient_dim(), other.ambient_dim());
        let mut rows = Vec::new();
        for r in &self.basis {
            let mut row = r.clone();
            row.extend(std::iter::repeat(Rat::zero()).take(mb));
            rows.push(row);
        }
        for r in &other.basis {
            let mut row: Vec<Rat> = std::iter::repeat(Rat::zero()).take(ma).collect();
            row.extend(r.iter().cloned());
            rows.push(row);
        }
        Lattice::from_rows(rows)
    }
}

/// A coset lattice + shift inside the ambient space of the lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coset {
    pub lattice: Lattice,
    pub shift: Vec<Rat>,
}

impl Coset {
    pub fn from_lattice(lattice: Lattice) -> Self {
        let shift = vec![Rat::zero(); lattice.ambient_dim()];
        Coset { lattice, shift }
    }

    pub fn with_shift(lattice: Lattice, shift: Vec<Rat>) -> Self {
        assert_eq!(shift.len(), lattice.ambient_dim());
        Coset { lattice, shift }
    }
}

/// Built-in lattice frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    /// Standard cubic lattice of the given rank.
    Z(usize),
    /// Integer vectors with even coordinate sum.
    D(usize),
    /// D_n glued with the all-halves vector; requires 4 | n.
    DPlus(usize),
    /// n orthogonal norm 2 roots in ambient dimension 2n.
    A1(usize),
    /// n orthogonal norm 3 vectors in ambient dimension 3n.
    Sqrt3Z(usize),
    /// The E_8 root lattice realized as D_8^+.
    E8,
}

fn unit(m: usize, i: usize) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); m];
    v[i] = Rat::one();
    v
}

/// Constructs one of the built-in lattice frames.
pub fn make_lattice(kind: LatticeKind) -> Result<Lattice, LatticeError> {
    let l = match kind {
        LatticeKind::Z(n) => {
            assert!(n >= 1);
            Lattice::from_rows((0..n).map(|i| unit(n, i)).collect())
        }
        LatticeKind::D(n) => {
            assert!(n >= 2);
            let mut rows: Vec<Vec<Rat>> = (0..n - 1)
                .map(|i| {
                    let mut v = unit(n, i);
                    v[i + 1] = -Rat::one();
                    v
                })
                .collect();
            let mut last = unit(n, n - 2);
            last[n - 1] = Rat::one();
            rows.push(last);
            Lattice::from_rows(rows)
        }
        LatticeKind::DPlus(n) => {
            if n % 4 != 0 {
                return Err(LatticeError::NotIntegral);
            }
            // The glue vector has coefficient 1/2 on the first chain row of
            // the D_n basis, so it can replace exactly that row.
            let mut rows: Vec<Vec<Rat>> = vec![vec![rat(1, 2); n]];
            for i in 1..n - 1 {
                let mut v = unit(n, i);
                v[i + 1] = -Rat::one();
                rows.push(v);
            }
            let mut last = unit(n, n - 2);
            last[n - 1] = Rat::one();
            rows.push(last);
            Lattice::from_rows(rows)
        }
        LatticeKind::A1(n) => {
            assert!(n >= 1);
            Lattice::from_rows(
                (0..n)
                    .map(|i| {
                        let mut v = unit(2 * n, 2 * i);
                        v[2 * i + 1] = Rat::one();
                        v
                    })
                    .collect(),
            )
        }
        LatticeKind::Sqrt3Z(n) => {
            assert!(n >= 1);
            Lattice::from_rows(
                (0..n)
                    .map(|i| {
                        let mut v = vec![Rat::zero(); 3 * n];
                        for j in 0..3 {
                            v[3 * i + j] = Rat::one();
                        }
                        v
                    })
                    .collect(),
            )
        }
        LatticeKind::E8 => make_lattice(LatticeKind::DPlus(8))?,
    };
    Ok(l)
}

/// Shift vector of the labeled D_n coset: 0, the all-halves glue vector,
/// the last unit vector, or their sum pattern (1/2, ..., 1/2, -1/2).
pub fn d_coset_shift(n: usize, label: usize) -> Vec<Rat> {
    assert!(label < 4);
    match label {
        0 => vec![Rat::zero(); n],
        1 => vec![rat(1, 2); n],
        2 => unit(n, n - 1),
        _ => {
            let mut v = vec![rat(1, 2); n];
            v[n - 1] = rat(-1, 2);
            v
        }
    }
}

/// The half-split orthogonal frame A_1^(2n) inside R^(2n): n rows
/// e_i + e_(n+i) followed by n rows e_i - e_(n+i). All rows have norm 2 and
/// the frame is a sublattice of D_2n.
pub fn a1_half_split(n: usize) -> Lattice {
    assert!(n >= 1);
    let m = 2 * n;
    let mut rows = Vec::with_capacity(m);
    for i in 0..n {
        let mut v = unit(m, i);
        v[n + i] = Rat::one();
        rows.push(v);
    }
    for i in 0..n {
        let mut v = unit(m, i);
        v[n + i] = -Rat::one();
        rows.push(v);
    }
    Lattice::from_rows(rows)
}

/// A marking direction for the elliptic variable: pairings with all coset
/// vectors must land on the 1/6 grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marking {
    v: Vec<Rat>,
}

impl Marking {
    /// Checks the sixth-integrality of the pairing on the generators and
    /// the shift of the coset.
    pub fn new(coset: &Coset, v: Vec<Rat>) -> Result<Self, LatticeError> {
        assert_eq!(v.len(), coset.lattice.ambient_dim());
        let six = rat_int(6);
        let on_grid = |x: &Rat| (x * &six).is_integer();
        for b in coset.lattice.basis() {
            if !on_grid(&dot(b, &v)) {
                return Err(LatticeError::IncompatibleMarking);
            }
        }
        if !on_grid(&dot(&coset.shift, &v)) {
            return Err(LatticeError::IncompatibleMarking);
        }
        Ok(Marking { v })
    }

    pub fn vector(&self) -> &[Rat] {
        &self.v
    }

    /// The elliptic charge of a vector in sixth units.
    pub fn charge_sixths(&self, lam: &[Rat]) -> i64 {
        let t = dot(lam, &self.v) * rat_int(6);
        assert!(t.is_integer(), "pairing off the 1/6 grid");
        t.to_integer().to_i64().expect("charge fits i64")
    }
}

/// A sign character on a coset.
#[derive(Debug, Clone, PartialEq)]
pub enum SignCharacter {
    /// Constant +1.
    Trivial,
    /// (-1)^(rho v^2); the scaled norm must be an integer on the coset.
    NormParity,
    /// (-1)^(v.w) for a fixed vector w with integer pairings.
    Linear { w: Vec<Rat> },
    /// exp(2 pi i (v.w + offset)); exponents must land on the 1/24 grid.
    Exp { w: Vec<Rat>, offset: Rat },
}

impl SignCharacter {
    /// Value on a coset vector. rho is the theta exponent scale.
    pub fn value(&self, lam: &[Rat], rho: &Q64) -> CycNum {
        match self {
            SignCharacter::Trivial => CycNum::one(),
            SignCharacter::NormParity => {
                let norm = dot(lam, lam);
                let t = norm * rat(*rho.numer(), *rho.denom());
                assert!(t.is_integer(), "norm parity needs integer scaled norm");
                if t.to_integer().is_even() {
                    CycNum::one()
                } else {
                    -&CycNum::one()
                }
            }
            SignCharacter::Linear { w } => {
                let t = dot(lam, w);
                assert!(t.is_integer(), "linear character needs integer pairing");
                if t.to_integer().is_even() {
                    CycNum::one()
                } else {
                    -&CycNum::one()
                }
            }
            SignCharacter::Exp { w, offset } => {
                let t = (dot(lam, w) + offset) * rat_int(24);
                assert!(t.is_integer(), "character exponent off the 1/24 grid");
                let k = t.to_integer().mod_floor(&BigInt::from(24));
                CycNum::root_of_unity(k.to_i64().expect("small residue"))
            }
        }
    }
}

/// All coset vectors with exact norm at most r2max, sorted by norm then by
/// coordinates. Enumeration is guided by a floating point Cholesky
/// decomposition with widened bounds; acceptance is exact.
pub fn short_vectors(coset: &Coset, r2max: &Rat) -> Vec<Vec<Rat>> {
    let lat = &coset.lattice;
    let n = lat.rank();
    let rmax = r2max.to_f64().expect("finite radius");
    if rmax < 0.0 {
        return Vec::new();
    }

    // Split the shift into span + perpendicular parts; the perpendicular
    // norm is a constant offset for the whole enumeration.
    let rhs: Vec<Rat> = lat.basis().iter().map(|b| dot(b, &coset.shift)).collect();
    let t_rat = solve_square(lat.gram(), &rhs).expect("gram invertible");
    let s_par: Vec<Rat> = (0..lat.ambient_dim())
        .map(|j| t_rat.iter().zip(lat.basis()).map(|(c, b)| c * &b[j]).sum())
        .collect();
    let s_perp = vec_sub(&coset.shift, &s_par);
    let c0 = dot(&s_perp, &s_perp);
    if &c0 > r2max {
        return Vec::new();
    }
    let r_eff = (r2max - &c0).to_f64().expect("finite radius") + 1e-9;

    // Fincke-Pohst quadratic form data: q[i][i] (x_i + sum_{j>i} q[i][j] x_j)^2.
    let mut q: Vec<Vec<f64>> = lat
        .gram()
        .iter()
        .map(|row| row.iter().map(|x| x.to_f64().expect("gram entry")).collect())
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let r = q[i][j] / q[i][i];
            q[j][i] = r;
            for l in (j)..n {
                q[j][l] -= r * q[i][l];
            }
        }
    }
    let t: Vec<f64> = t_rat.iter().map(|x| x.to_f64().expect("shift coord")).collect();

    let mut found: Vec<(Rat, Vec<Rat>)> = Vec::new();
    let mut x = vec![0i64; n];
    // Depth-first over coordinates n-1 down to 0.
    fn descend(
        level: usize,
        used: f64,
        q: &[Vec<f64>],
        t: &[f64],
        x: &mut Vec<i64>,
        r_eff: f64,
        coset: &Coset,
        r2max: &Rat,
        out: &mut Vec<(Rat, Vec<Rat>)>,
    ) {
        let i = level - 1;
        let n = q.len();
        // Inner linear form: ratios are stored in the lower triangle.
        let mut lin = t[i];
        for j in (i + 1)..n {
            lin += q[j][i] * (x[j] as f64 + t[j]);
        }
        let room = (r_eff - used).max(0.0);
        let halfwidth = (room / q[i][i]).sqrt();
        let lo = (-lin - halfwidth).floor() as i64 - 2;
        let hi = (-lin + halfwidth).ceil() as i64 + 2;
        for xi in lo..=hi {
            x[i] = xi;
            let y = xi as f64 + lin;
            let contrib = q[i][i] * y * y;
            if contrib > r_eff - used + 1e-6 {
                continue;
            }
            if i == 0 {
                // Exact acceptance.
                let mut v = coset.shift.clone();
                for (k, &xk) in x.iter().enumerate() {
                    if xk != 0 {
                        for (slot, b) in v.iter_mut().zip(&coset.lattice.basis()[k]) {
                            *slot = &*slot + &(b * &rat_int(xk));
                        }
                    }
                }
                let norm = dot(&v, &v);
                if &norm <= r2max {
                    out.push((norm, v));
                }
            } else {
                descend(i, used + contrib, q, t, x, r_eff, coset, r2max, out);
            }
        }
        x[i] = 0;
    }
    if n > 0 {
        descend(n, 0.0, &q, &t, &mut x, r_eff, coset, r2max, &mut found);
    }
    found.sort();
    found.into_iter().map(|(_, v)| v).collect()
}

/// Theta series of a coset: optional marking for the elliptic charge, a
/// sign character, truncation order in q, exponent scale rho in {1, 1/2}.
pub fn theta(
    coset: &Coset,
    marking: Option<&Marking>,
    sign: &SignCharacter,
    trunc: Q64,
    rho: Q64,
) -> Result<JacobiSeries, LatticeError> {
    assert!(
        rho == Q64::one() || rho == Q64::new(1, 2),
        "exponent scale must be 1 or 1/2"
    );
    let trunc24 = q_to_grid(trunc)?;
    // q exponent is rho v^2 / 2; enumerate v^2 <= trunc24 / (12 rho).
    let r2max = rat_int(trunc24) / (rat_int(12) * rat(*rho.numer(), *rho.denom()));
    let mut terms: BTreeMap<(i64, i64), CycNum> = BTreeMap::new();
    for v in short_vectors(coset, &r2max) {
        let norm = dot(&v, &v);
        let qe = &norm * &rat(*rho.numer(), *rho.denom()) * rat_int(QGRID) / rat_int(2);
        if !qe.is_integer() {
            return Err(LatticeError::Series(SeriesError::DenominatorOverflow));
        }
        let qe24 = qe.to_integer().to_i64().expect("exponent fits i64");
        if qe24 >= trunc24 {
            continue;
        }
        let ze = match marking {
            Some(m) => m.charge_sixths(&v),
            None => 0,
        };
        let c = sign.value(&v, &rho);
        terms
            .entry((qe24, ze))
            .and_modify(|acc| *acc = &*acc + &c)
            .or_insert(c);
    }
    Ok(JacobiSeries::from_terms_grid(
        trunc24,
        terms.into_iter().map(|((qe, ze), c)| (qe, ze, c)),
    ))
}

/// Result of expressing a big coset as glue classes over a sublattice:
/// dual-coordinate labels mod 1 with minimal-norm representatives.
#[derive(Debug, Clone)]
pub struct GlueImage {
    /// Sorted label vectors; entries are reduced to [0, 1).
    pub labels: Vec<Vec<Rat>>,
    /// A minimal-norm coset vector per label, aligned with `labels`.
    pub reps: Vec<Vec<Rat>>,
    /// Expected number of labels, the square root of the determinant ratio.
    pub index: u64,
}

fn frac_part(x: &Rat) -> Rat {
    x - Rat::from(x.floor().to_integer())
}

/// Computes the glue group of `big` over the sublattice `sub` (same rank,
/// same ambient space). Labels are sub-dual coordinates mod 1.
pub fn glue_image(big: &Coset, sub: &Lattice) -> Result<GlueImage, LatticeError> {
    if sub.rank() != big.lattice.rank() || sub.ambient_dim() != big.lattice.ambient_dim() {
        return Err(LatticeError::NotASublattice);
    }
    for row in sub.basis() {
        if !big.lattice.contains(row) {
            return Err(LatticeError::NotASublattice);
        }
    }
    let ratio = sub.det() / big.lattice.det();
    if !ratio.is_integer() {
        return Err(LatticeError::NotASublattice);
    }
    let ratio = ratio.to_integer();
    let index = ratio.sqrt();
    if &index * &index != ratio {
        return Err(LatticeError::NotASublattice);
    }
    let index = index.to_u64().expect("index fits u64");

    let dual = sub.dual_basis();
    let mut seen: BTreeMap<Vec<Rat>, Vec<Rat>> = BTreeMap::new();
    let cap = 2 * sub.rank() as i64 + 4;
    let mut radius = 1i64;
    while (seen.len() as u64) < index && radius <= cap {
        for v in short_vectors(big, &rat_int(radius)) {
            let label: Vec<Rat> = dual.iter().map(|d| frac_part(&dot(d, &v))).collect();
            seen.entry(label).or_insert(v);
        }
        radius += 1;
    }
    if (seen.len() as u64) != index {
        return Err(LatticeError::GlueIncomplete);
    }
    let (labels, reps): (Vec<_>, Vec<_>) = seen.into_iter().unzip();
    Ok(GlueImage {
        labels,
        reps,
        index,
    })
}

impl GlueImage {
    /// Interprets labels with entries in {0, 1/2} as bitmask words.
    pub fn as_binary_words(&self) -> Option<Vec<u64>> {
        let half = rat(1, 2);
        let mut out = Vec::with_capacity(self.labels.len());
        for label in &self.labels {
            let mut w = 0u64;
            for (i, x) in label.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                if *x == half {
                    w |= 1 << i;
                } else {
                    return None;
                }
            }
            out.push(w);
        }
        out.sort_unstable();
        Some(out)
    }

    /// Interprets labels with entries in {0, 1/3, 2/3} as ternary words.
    pub fn as_ternary_words(&self) -> Option<Vec<Vec<u8>>> {
        let third = rat(1, 3);
        let two_thirds = rat(2, 3);
        let mut out = Vec::with_capacity(self.labels.len());
        for label in &self.labels {
            let mut w = Vec::with_capacity(label.len());
            for x in label {
                if x.is_zero() {
                    w.push(0u8);
                } else if *x == third {
                    w.push(1u8);
                } else if *x == two_thirds {
                    w.push(2u8);
                } else {
                    return None;
                }
            }
            out.push(w);
        }
        out.sort_unstable();
        Some(out)
    }
}

/// Exact orthogonal projection onto the rational span of a lattice.
#[derive(Debug, Clone)]
pub struct Projector {
    basis: Vec<Vec<Rat>>,
    gram_inv: Vec<Vec<Rat>>,
}

impl Projector {
    pub fn onto(lat: &Lattice) -> Self {
        Projector {
            basis: lat.basis().to_vec(),
            gram_inv: invert_square(lat.gram()).expect("gram invertible"),
        }
    }

    /// The component of v inside the span.
    pub fn project(&self, v: &[Rat]) -> Vec<Rat> {
        let rhs: Vec<Rat> = self.basis.iter().map(|b| dot(b, v)).collect();
        let coeff: Vec<Rat> = self
            .gram_inv
            .iter()
            .map(|row| row.iter().zip(&rhs).map(|(a, b)| a * b).sum())
            .collect();
        (0..v.len())
            .map(|j| coeff.iter().zip(&self.basis).map(|(c, b)| c * &b[j]).sum())
            .collect()
    }
}

/// Square root of a positive integer inside Q(zeta_24): the squarefree part
/// must divide 6.
fn sqrt_in_field(n: &BigInt) -> Option<CycNum> {
    assert!(n.is_positive());
    let mut square = BigInt::one();
    let mut free = n.clone();
    // Extract square factors by trial division.
    let mut p = BigInt::from(2);
    while &p * &p <= free {
        let p2 = &p * &p;
        while (&free % &p2).is_zero() {
            free /= &p2;
            square *= &p;
        }
        p += 1;
    }
    let s = CycNum::from_rational(Rat::from(square));
    let free = free.to_i64()?;
    let root = match free {
        1 => CycNum::one(),
        2 => CycNum::sqrt2(),
        3 => CycNum::sqrt3(),
        6 => &CycNum::sqrt2() * &CycNum::sqrt3(),
        _ => return None,
    };
    Some(&s * &root)
}

/// Modular S-matrix of the discriminant group L*/L with entries
/// |L*/L|^(-1/2) exp(-2 pi i gamma.delta) over representatives sorted by
/// norm. Pairings must land on the 1/24 grid.
pub fn lattice_smatrix(lat: &Lattice) -> Result<Vec<Vec<CycNum>>, LatticeError> {
    let disc = lat.det();
    assert!(disc.is_integer(), "integral discriminant expected");
    let disc_int = disc.to_integer();
    if disc_int > BigInt::from(10_000) {
        return Err(LatticeError::DiscriminantTooLarge);
    }
    let order = disc_int.to_u64().expect("small discriminant");

    // Enumerate dual classes by increasing norm. A dual vector is reduced
    // modulo the lattice through its basis coordinates, i.e. its pairings
    // with the dual basis rows.
    let dual_rows = lat.dual_basis();
    let dual_coset = Coset::from_lattice(Lattice::from_rows(dual_rows.clone()));
    let mut seen: BTreeMap<Vec<Rat>, (Rat, Vec<Rat>)> = BTreeMap::new();
    let cap = 2 * lat.rank() as i64 + 4;
    let mut radius = 1i64;
    while (seen.len() as u64) < order && radius <= cap {
        for v in short_vectors(&dual_coset, &rat_int(radius)) {
            let label: Vec<Rat> = dual_rows.iter().map(|d| frac_part(&dot(d, &v))).collect();
            let norm = dot(&v, &v);
            seen.entry(label).or_insert((norm, v));
        }
        radius += 1;
    }
    if (seen.len() as u64) != order {
        return Err(LatticeError::GlueIncomplete);
    }
    let mut reps: Vec<(Rat, Vec<Rat>)> = seen.into_values().collect();
    reps.sort();
    let reps: Vec<Vec<Rat>> = reps.into_iter().map(|(_, v)| v).collect();

    let root = sqrt_in_field(&disc_int).expect("discriminant square root outside the field");
    let scale = root.inverse().expect("nonzero square root");
    let mut rows = Vec::with_capacity(reps.len());
    for g in &reps {
        let mut row = Vec::with_capacity(reps.len());
        for d in &reps {
            let t = dot(g, d) * rat_int(24);
            if !t.is_integer() {
                return Err(LatticeError::Series(SeriesError::DenominatorOverflow));
            }
            let k = t.to_integer().mod_floor(&BigInt::from(24));
            let phase = CycNum::root_of_unity(-k.to_i64().expect("small residue"));
            row.push(&phase * &scale);
        }
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Q64 {
        Q64::new(n, d)
    }

    /// Brute box enumeration oracle: integer coefficient box scan.
    fn brute_vectors(coset: &Coset, r2max: &Rat, span: i64) -> Vec<Vec<Rat>> {
        let n = coset.lattice.rank();
        let mut out = Vec::new();
        let mut x = vec![-span; n];
        loop {
            let mut v = coset.shift.clone();
            for (k, &xk) in x.iter().enumerate() {
                for (slot, b) in v.iter_mut().zip(&coset.lattice.basis()[k]) {
                    *slot = &*slot + &(b * &rat_int(xk));
                }
            }
            let norm = dot(&v, &v);
            if &norm <= r2max {
                out.push((norm, v));
            }
            let mut idx = 0;
            loop {
                if idx == n {
                    out.sort();
                    return out.into_iter().map(|(_, v)| v).collect();
                }
                x[idx] += 1;
                if x[idx] <= span {
                    break;
                }
                x[idx] = -span;
                idx += 1;
            }
        }
    }

    #[test]
    fn short_vectors_match_brute_force() {
        let z3 = make_lattice(LatticeKind::Z(3)).unwrap();
        let coset = Coset::with_shift(z3, vec![rat(1, 2), rat(1, 3), Rat::zero()]);
        let fast = short_vectors(&coset, &rat_int(5));
        let brute = brute_vectors(&coset, &rat_int(5), 4);
        assert_eq!(fast, brute);

        let d4 = make_lattice(LatticeKind::D(4)).unwrap();
        let coset = Coset::with_shift(d4, d_coset_shift(4, 1));
        let fast = short_vectors(&coset, &rat_int(4));
        let brute = brute_vectors(&coset, &rat_int(4), 5);
        assert_eq!(fast, brute);
    }

    #[test]
    fn benchmark_vector_counts() {
        let z4 = Coset::from_lattice(make_lattice(LatticeKind::Z(4)).unwrap());
        let norm1: Vec<_> = short_vectors(&z4, &rat_int(1))
            .into_iter()
            .filter(|v| dot(v, v) == rat_int(1))
            .collect();
        assert_eq!(norm1.len(), 8);

        let d8p = Coset::from_lattice(make_lattice(LatticeKind::DPlus(8)).unwrap());
        let norm2: Vec<_> = short_vectors(&d8p, &rat_int(2))
            .into_iter()
            .filter(|v| dot(v, v) == rat_int(2))
            .collect();
        assert_eq!(norm2.len(), 240);

        let d12p = Coset::from_lattice(make_lattice(LatticeKind::DPlus(12)).unwrap());
        let upto1 = short_vectors(&d12p, &rat_int(1));
        assert_eq!(upto1.len(), 1, "only the zero vector below norm 2");
    }

    #[test]
    fn theta_of_z_and_d8plus() {
        let z1 = Coset::from_lattice(make_lattice(LatticeKind::Z(1)).unwrap());
        let t = theta(&z1, None, &SignCharacter::Trivial, q(5, 1), Q64::one()).unwrap();
        assert_eq!(t.coeff(0, 0), CycNum::one());
        assert_eq!(t.coeff(12, 0), CycNum::from_integer(2));
        assert_eq!(t.coeff(48, 0), CycNum::from_integer(2));
        assert_eq!(t.coeff(108, 0), CycNum::from_integer(2));
        assert!(t.coeff(24, 0).is_zero());

        let d8p = Coset::from_lattice(make_lattice(LatticeKind::E8).unwrap());
        let t = theta(&d8p, None, &SignCharacter::Trivial, q(3, 1), Q64::one()).unwrap();
        assert_eq!(t.coeff(24, 0), CycNum::from_integer(240));
        assert_eq!(t.coeff(48, 0), CycNum::from_integer(2160));
    }

    #[test]
    fn half_scale_signed_d4_theta() {
        let d4 = Coset::from_lattice(make_lattice(LatticeKind::D(4)).unwrap());
        let t = theta(&d4, None, &SignCharacter::NormParity, q(2, 1), q(1, 2)).unwrap();
        assert_eq!(t.coeff(0, 0), CycNum::one());
        assert_eq!(t.coeff(12, 0), CycNum::from_integer(-24));
        assert_eq!(t.coeff(24, 0), CycNum::from_integer(24));
        assert_eq!(t.coeff(36, 0), CycNum::from_integer(-96));
    }

    #[test]
    fn theta_multiplies_over_direct_sums() {
        let z1 = make_lattice(LatticeKind::Z(1)).unwrap();
        let z2 = z1.direct_sum(&z1);
        let t1 = theta(
            &Coset::from_lattice(z1),
            None,
            &SignCharacter::Trivial,
            q(4, 1),
            Q64::one(),
        )
        .unwrap();
        let t2 = theta(
            &Coset::from_lattice(z2),
            None,
            &SignCharacter::Trivial,
            q(4, 1),
            Q64::one(),
        )
        .unwrap();
        assert_eq!(t1.mul(&t1).unwrap(), t2);
    }

    #[test]
    fn d4plus_theta_matches_z4() {
        let d4p = Coset::from_lattice(make_lattice(LatticeKind::DPlus(4)).unwrap());
        let z4 = Coset::from_lattice(make_lattice(LatticeKind::Z(4)).unwrap());
        let a = theta(&d4p, None, &SignCharacter::Trivial, q(6, 1), Q64::one()).unwrap();
        let b = theta(&z4, None, &SignCharacter::Trivial, q(6, 1), Q64::one()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dplus_requires_divisibility_by_four() {
        assert_eq!(
            make_lattice(LatticeKind::DPlus(6)).unwrap_err(),
            LatticeError::NotIntegral
        );
    }

    #[test]
    fn marking_grid_check() {
        let z2 = Coset::from_lattice(make_lattice(LatticeKind::Z(2)).unwrap());
        assert!(Marking::new(&z2, vec![rat(1, 6), Rat::zero()]).is_ok());
        assert_eq!(
            Marking::new(&z2, vec![rat(1, 7), Rat::zero()]).unwrap_err(),
            LatticeError::IncompatibleMarking
        );

        let z1 = Coset::from_lattice(make_lattice(LatticeKind::Z(1)).unwrap());
        let m = Marking::new(&z1, vec![rat(1, 2)]).unwrap();
        let t = theta(&z1, Some(&m), &SignCharacter::Trivial, q(2, 1), Q64::one()).unwrap();
        assert_eq!(t.coeff(12, 3), CycNum::one());
        assert_eq!(t.coeff(12, -3), CycNum::one());
        assert!(t.coeff(12, 0).is_zero());
    }

    #[test]
    fn twisted_fermion_pair_character_cancels() {
        // Z + 1/2 with the alternating character: contributions cancel in
        // pairs, the series is identically zero.
        let z1 = make_lattice(LatticeKind::Z(1)).unwrap();
        let coset = Coset::with_shift(z1, vec![rat(1, 2)]);
        let sign = SignCharacter::Exp {
            w: vec![rat(1, 2)],
            offset: rat(-1, 4),
        };
        let t = theta(&coset, None, &sign, q(6, 1), Q64::one()).unwrap();
        assert!(t.is_empty());

        let plain = theta(&coset, None, &SignCharacter::Trivial, q(6, 1), Q64::one()).unwrap();
        assert_eq!(plain.coeff(3, 0), CycNum::from_integer(2));
        assert_eq!(plain.coeff(27, 0), CycNum::from_integer(2));
    }

    #[test]
    fn glue_of_d6_over_half_split_frame() {
        use crate::codes::d_code_family;
        let family = d_code_family(3);
        let sub = a1_half_split(3);
        let d6 = make_lattice(LatticeKind::D(6)).unwrap();
        for label in 0..4 {
            let coset = Coset::with_shift(d6.clone(), d_coset_shift(6, label));
            let glue = glue_image(&coset, &sub).unwrap();
            assert_eq!(glue.index, 4);
            let words = glue.as_binary_words().unwrap();
            let mut expect: Vec<u64> = family
                .code
                .words()
                .iter()
                .map(|&w| w ^ family.reps[label])
                .collect();
            expect.sort_unstable();
            assert_eq!(words, expect, "label {}", label);
        }
    }

    #[test]
    fn glue_of_d12plus_over_lambda_frame() {
        use crate::codes::{golay12, golay_lambda_basis};
        let code = golay12().unwrap();
        let basis = golay_lambda_basis(&code).unwrap();
        let sub = Lattice::from_rows(basis);
        let big = Coset::from_lattice(make_lattice(LatticeKind::DPlus(12)).unwrap());
        let glue = glue_image(&big, &sub).unwrap();
        assert_eq!(glue.index, 729);
        let words = glue.as_ternary_words().unwrap();
        assert_eq!(words.len(), 729);
        // The label set carries the ternary Golay weight distribution.
        let mut dist: BTreeMap<usize, usize> = BTreeMap::new();
        for w in &words {
            *dist.entry(w.iter().filter(|&&x| x != 0).count()).or_insert(0) += 1;
        }
        let expect: BTreeMap<usize, usize> =
            [(0, 1), (6, 264), (9, 440), (12, 24)].into_iter().collect();
        assert_eq!(dist, expect);
    }

    #[test]
    fn glue_rejects_non_sublattice() {
        let z2 = make_lattice(LatticeKind::Z(2)).unwrap();
        let shifted = Lattice::from_rows(vec![
            vec![rat(1, 3), Rat::zero()],
            vec![Rat::zero(), Rat::one()],
        ]);
        let err = glue_image(&Coset::from_lattice(shifted), &z2);
        assert!(err.is_ok(), "Z^2 is a sublattice of the finer frame");
        let err = glue_image(&Coset::from_lattice(z2.clone()), &Lattice::from_rows(vec![
            vec![rat(1, 3), Rat::zero()],
            vec![Rat::zero(), Rat::one()],
        ]));
        assert_eq!(err.unwrap_err(), LatticeError::NotASublattice);
    }

    #[test]
    fn smatrix_of_a1_is_real() {
        let a1 = make_lattice(LatticeKind::A1(1)).unwrap();
        let s = lattice_smatrix(&a1).unwrap();
        assert_eq!(s.len(), 2);
        let inv_sqrt2 = CycNum::sqrt2().inverse().unwrap();
        assert_eq!(s[0][0], inv_sqrt2);
        assert_eq!(s[0][1], inv_sqrt2);
        assert_eq!(s[1][0], inv_sqrt2);
        assert_eq!(s[1][1], -&inv_sqrt2);
    }

    #[test]
    fn smatrix_of_d4_is_real_half_matrix() {
        let d4 = make_lattice(LatticeKind::D(4)).unwrap();
        let s = lattice_smatrix(&d4).unwrap();
        assert_eq!(s.len(), 4);
        for row in &s {
            for x in row {
                let r = x.as_rational().expect("real rational entry");
                assert!(r == rat(1, 2) || r == rat(-1, 2));
            }
        }
        for x in &s[0] {
            assert_eq!(x.as_rational().unwrap(), rat(1, 2));
        }
    }

    #[test]
    fn smatrix_of_sqrt3_line_is_complex_and_unitary() {
        let l = make_lattice(LatticeKind::Sqrt3Z(1)).unwrap();
        let s = lattice_smatrix(&l).unwrap();
        assert_eq!(s.len(), 3);
        let mut saw_nonreal = false;
        for row in &s {
            for x in row {
                if *x != x.conj() {
                    saw_nonreal = true;
                }
            }
        }
        assert!(saw_nonreal, "cube root phases appear");
        // Unitarity: S conj(S)^T = id exactly.
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = CycNum::zero();
                for k in 0..3 {
                    acc = &acc + &(&s[i][k] * &s[j][k].conj());
                }
                let expect = if i == j { CycNum::one() } else { CycNum::zero() };
                assert_eq!(acc, expect);
            }
        }
    }

    #[test]
    fn smatrix_discriminant_guard() {
        let l = make_lattice(LatticeKind::Sqrt3Z(9)).unwrap();
        assert_eq!(
            lattice_smatrix(&l).unwrap_err(),
            LatticeError::DiscriminantTooLarge
        );
    }

    #[test]
    fn projector_splits_orthogonally() {
        let frame = a1_half_split(3);
        let left = Lattice::from_rows(frame.basis()[..3].to_vec());
        let proj = Projector::onto(&left);
        let v = unit(6, 0);
        let p = proj.project(&v);
        assert_eq!(p, vec![rat(1, 2), Rat::zero(), Rat::zero(), rat(1, 2), Rat::zero(), Rat::zero()]);
        let perp = vec_sub(&v, &p);
        for b in left.basis() {
            assert!(dot(b, &perp).is_zero());
        }
    }

    #[test]
    fn half_split_frame_sits_inside_d() {
        let d6 = make_lattice(LatticeKind::D(6)).unwrap();
        for row in a1_half_split(3).basis() {
            assert!(d6.contains(row));
        }
    }
}
