//! The small N=4 superconformal algebra at central charge c = 6k, as exact
//! symbolic data: structure constants over polynomials in c and k with
//! cyclotomic coefficients.
//!
//! Generators and gradings:
//!
//! | generator | modes        | parity |
//! |-----------|--------------|--------|
//! | L_m       | integers     | even   |
//! | J^i_m     | integers     | even   |
//! | G^a_r     | half-odd     | odd    |
//!
//! with i in {1, 2, 3} and a in {0, 1, 2, 3}. The bracket table:
//!
//!   [L_m, L_n]     = (m - n) L_(m+n) + c/12 (m^3 - m) delta_(m+n)
//!   [L_m, G^a_r]   = (m/2 - r) G^a_(m+r)
//!   [L_m, J^i_n]   = -n J^i_(m+n)
//!   {G^a_r, G^b_s} = 2 d_ab L_(r+s) - 4 (r - s) sum_i alpha^i_ab J^i_(r+s)
//!                    + c/3 (r^2 - 1/4) d_ab delta_(r+s)
//!   [J^i_m, G^a_r] = sum_b alpha^i_ab G^b_(m+r)
//!   [J^i_m, J^j_n] = sum_l eps_ijl J^l_(m+n) - m (k/2) d_ij delta_(m+n)
//!
//! where alpha^i_ab = (d_ai d_b0 - d_bi d_a0)/2 + eps_iab/2 and eps
//! vanishes whenever an index is 0. The graded Jacobi identity holds only
//! after the substitution c = 6k, which ties the two central terms
//! together; the raw residuals are multiples of c - 6k.
//!
//! A diagonalized basis J = -2i J^1, J^(+-) = (+-)J^2 - i J^3 with four
//! recombined supercurrents closes into an N=2-style subalgebra, and the
//! integer spectral flow acts there by shifting J^(+-) modes and mixing L
//! with J.

use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;
use vosa_core::cyclotomic::{rat, rat_int, CycNum, Rat};

/// Errors from symbolic algebra operations.
#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum AlgebraError {
    #[error("unsupported mode")]
    UnsupportedMode,
    #[error("unsupported field")]
    UnsupportedField,
    #[error("cutoff too large")]
    CutoffTooLarge,
}

/// A basis symbol: the identity (central) element or a graded generator
/// mode. Modes are stored doubled so G modes stay integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Gen {
    /// Identity element carrying central polynomial coefficients.
    One,
    /// Virasoro mode L_m with two_m = 2m.
    L { two_m: i64 },
    /// Current mode J^i_m, i in 1..=3, two_m = 2m.
    J { i: u8, two_m: i64 },
    /// Supercurrent mode G^a_r, a in 0..=3, two_r = 2r odd.
    G { a: u8, two_r: i64 },
}

impl Gen {
    pub fn l(m: i64) -> Self {
        Gen::L { two_m: 2 * m }
    }

    pub fn j(i: u8, m: i64) -> Self {
        assert!((1..=3).contains(&i));
        Gen::J { i, two_m: 2 * m }
    }

    pub fn g(a: u8, two_r: i64) -> Self {
        assert!(a <= 3);
        assert!(two_r.rem_euclid(2) == 1, "G modes are half-odd integers");
        Gen::G { a, two_r }
    }

    /// Super parity: 1 for G modes, 0 otherwise.
    pub fn parity(&self) -> u8 {
        match self {
            Gen::G { .. } => 1,
            _ => 0,
        }
    }
}

/// A polynomial in the central symbols c and k with cyclotomic
/// coefficients, keyed by (c power, k power).
#[derive(Clone, PartialEq, Eq, Default)]
pub struct CKPoly {
    terms: BTreeMap<(u32, u32), CycNum>,
}

impl CKPoly {
    pub fn zero() -> Self {
        CKPoly::default()
    }

    pub fn constant(v: CycNum) -> Self {
        let mut p = CKPoly::zero();
        if !v.is_zero() {
            p.terms.insert((0, 0), v);
        }
        p
    }

    pub fn one() -> Self {
        Self::constant(CycNum::one())
    }

    pub fn monomial(cpow: u32, kpow: u32, v: CycNum) -> Self {
        let mut p = CKPoly::zero();
        if !v.is_zero() {
            p.terms.insert((cpow, kpow), v);
        }
        p
    }

    pub fn c() -> Self {
        Self::monomial(1, 0, CycNum::one())
    }

    pub fn k() -> Self {
        Self::monomial(0, 1, CycNum::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &CKPoly) -> CKPoly {
        let mut out = self.clone();
        for (key, v) in &other.terms {
            let slot = out.terms.entry(*key).or_insert_with(CycNum::zero);
            *slot = &*slot + v;
            if slot.is_zero() {
                out.terms.remove(key);
            }
        }
        out
    }

    pub fn neg(&self) -> CKPoly {
        CKPoly {
            terms: self.terms.iter().map(|(k, v)| (*k, -v)).collect(),
        }
    }

    pub fn sub(&self, other: &CKPoly) -> CKPoly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &CKPoly) -> CKPoly {
        let mut out = CKPoly::zero();
        for ((ca, ka), va) in &self.terms {
            for ((cb, kb), vb) in &other.terms {
                let key = (ca + cb, ka + kb);
                let prod = va * vb;
                let slot = out.terms.entry(key).or_insert_with(CycNum::zero);
                *slot = &*slot + &prod;
                if slot.is_zero() {
                    out.terms.remove(&key);
                }
            }
        }
        out
    }

    pub fn scale(&self, v: &CycNum) -> CKPoly {
        if v.is_zero() {
            return CKPoly::zero();
        }
        CKPoly {
            terms: self.terms.iter().map(|(k, w)| (*k, w * v)).collect(),
        }
    }

    /// Substitutes c = 6k.
    pub fn subst_c_6k(&self) -> CKPoly {
        let mut out = CKPoly::zero();
        for ((cp, kp), v) in &self.terms {
            let mut scaled = v.clone();
            for _ in 0..*cp {
                scaled = scaled.scale(&rat_int(6));
            }
            let key = (0, kp + cp);
            let slot = out.terms.entry(key).or_insert_with(CycNum::zero);
            *slot = &*slot + &scaled;
            if slot.is_zero() {
                out.terms.remove(&key);
            }
        }
        out
    }

    /// Evaluates at numeric central values.
    pub fn eval(&self, cval: &CycNum, kval: &CycNum) -> CycNum {
        let mut acc = CycNum::zero();
        for ((cp, kp), v) in &self.terms {
            let mut term = v.clone();
            for _ in 0..*cp {
                term = &term * cval;
            }
            for _ in 0..*kp {
                term = &term * kval;
            }
            acc = &acc + &term;
        }
        acc
    }
}

impl fmt::Debug for CKPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, ((cp, kp), v)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:?})", v)?;
            if *cp > 0 {
                write!(f, " c^{}", cp)?;
            }
            if *kp > 0 {
                write!(f, " k^{}", kp)?;
            }
        }
        Ok(())
    }
}

/// A finite linear combination of basis symbols with CKPoly coefficients.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct ModeExpr {
    terms: BTreeMap<Gen, CKPoly>,
}

impl ModeExpr {
    pub fn zero() -> Self {
        ModeExpr::default()
    }

    pub fn gen(g: Gen) -> Self {
        Self::term(g, CKPoly::one())
    }

    pub fn term(g: Gen, coeff: CKPoly) -> Self {
        let mut e = ModeExpr::zero();
        if !coeff.is_zero() {
            e.terms.insert(g, coeff);
        }
        e
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, g: &Gen) -> CKPoly {
        self.terms.get(g).cloned().unwrap_or_default()
    }

    pub fn support(&self) -> Vec<Gen> {
        self.terms.keys().copied().collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Gen, &CKPoly)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &ModeExpr) -> ModeExpr {
        let mut out = self.clone();
        for (g, p) in &other.terms {
            let slot = out.terms.entry(*g).or_default();
            *slot = slot.add(p);
            if slot.is_zero() {
                out.terms.remove(g);
            }
        }
        out
    }

    pub fn neg(&self) -> ModeExpr {
        ModeExpr {
            terms: self.terms.iter().map(|(g, p)| (*g, p.neg())).collect(),
        }
    }

    pub fn sub(&self, other: &ModeExpr) -> ModeExpr {
        self.add(&other.neg())
    }

    pub fn scale(&self, p: &CKPoly) -> ModeExpr {
        if p.is_zero() {
            return ModeExpr::zero();
        }
        let mut out = ModeExpr::zero();
        for (g, q) in &self.terms {
            let prod = q.mul(p);
            if !prod.is_zero() {
                out.terms.insert(*g, prod);
            }
        }
        out
    }

    pub fn scale_cyc(&self, v: &CycNum) -> ModeExpr {
        self.scale(&CKPoly::constant(v.clone()))
    }

    /// Substitutes c = 6k in every coefficient.
    pub fn subst_c_6k(&self) -> ModeExpr {
        let mut out = ModeExpr::zero();
        for (g, p) in &self.terms {
            let q = p.subst_c_6k();
            if !q.is_zero() {
                out.terms.insert(*g, q);
            }
        }
        out
    }
}

impl fmt::Debug for ModeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (g, p)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "[{:?}] {:?}", p, g)?;
        }
        Ok(())
    }
}

/// Totally antisymmetric symbol on {1, 2, 3}; zero if any index is 0.
fn eps(i: u8, j: u8, k: u8) -> i64 {
    match (i, j, k) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1,
        (3, 2, 1) | (2, 1, 3) | (1, 3, 2) => -1,
        _ => 0,
    }
}

/// The mixing coefficients alpha^i_ab for i in 1..=3 and a, b in 0..=3.
pub fn alpha(i: u8, a: u8, b: u8) -> Rat {
    let mut v = Rat::from_integer(0.into());
    if a == i && b == 0 {
        v = &v + &rat(1, 2);
    }
    if b == i && a == 0 {
        v = &v - &rat(1, 2);
    }
    if a != 0 && b != 0 {
        v = &v + &rat(eps(i, a, b), 2);
    }
    v
}

/// Super bracket of two basis modes: commutator, or anticommutator when
/// both arguments are G modes.
pub fn basis_bracket(x: &Gen, y: &Gen) -> ModeExpr {
    match (*x, *y) {
        (Gen::One, _) | (_, Gen::One) => ModeExpr::zero(),

        (Gen::L { two_m: tm }, Gen::L { two_m: tn }) => {
            let (m, n) = (tm / 2, tn / 2);
            let mut out = ModeExpr::term(
                Gen::L { two_m: tm + tn },
                CKPoly::constant(CycNum::from_integer(m - n)),
            );
            if tm + tn == 0 {
                let central = rat(m * m * m - m, 12);
                out = out.add(&ModeExpr::term(
                    Gen::One,
                    CKPoly::monomial(1, 0, CycNum::from_rational(central)),
                ));
            }
            out
        }

        (Gen::L { two_m }, Gen::G { a, two_r }) => ModeExpr::term(
            Gen::G {
                a,
                two_r: two_m + two_r,
            },
            CKPoly::constant(CycNum::from_rational(rat(two_m - 2 * two_r, 4))),
        ),
        (Gen::G { .. }, Gen::L { .. }) => basis_bracket(y, x).neg(),

        (Gen::L { two_m }, Gen::J { i, two_m: tn }) => ModeExpr::term(
            Gen::J {
                i,
                two_m: two_m + tn,
            },
            CKPoly::constant(CycNum::from_rational(rat(-tn, 2))),
        ),
        (Gen::J { .. }, Gen::L { .. }) => basis_bracket(y, x).neg(),

        (Gen::G { a, two_r: tr }, Gen::G { a: b, two_r: ts }) => {
            let mut out = ModeExpr::zero();
            if a == b {
                out = out.add(&ModeExpr::term(
                    Gen::L { two_m: tr + ts },
                    CKPoly::constant(CycNum::from_integer(2)),
                ));
                if tr + ts == 0 {
                    // c/3 (r^2 - 1/4) = c (tr^2 - 1)/12.
                    let central = rat(tr * tr - 1, 12);
                    out = out.add(&ModeExpr::term(
                        Gen::One,
                        CKPoly::monomial(1, 0, CycNum::from_rational(central)),
                    ));
                }
            }
            // -4 (r - s) alpha^i_ab = -2 (tr - ts) alpha^i_ab.
            for i in 1..=3u8 {
                let coeff = &rat_int(-2 * (tr - ts)) * &alpha(i, a, b);
                if !num_traits::Zero::is_zero(&coeff) {
                    out = out.add(&ModeExpr::term(
                        Gen::J {
                            i,
                            two_m: tr + ts,
                        },
                        CKPoly::constant(CycNum::from_rational(coeff)),
                    ));
                }
            }
            out
        }

        (Gen::J { i, two_m }, Gen::G { a, two_r }) => {
            let mut out = ModeExpr::zero();
            for b in 0..=3u8 {
                let coeff = alpha(i, a, b);
                if !num_traits::Zero::is_zero(&coeff) {
                    out = out.add(&ModeExpr::term(
                        Gen::G {
                            a: b,
                            two_r: two_m + two_r,
                        },
                        CKPoly::constant(CycNum::from_rational(coeff)),
                    ));
                }
            }
            out
        }
        (Gen::G { .. }, Gen::J { .. }) => basis_bracket(y, x).neg(),

        (Gen::J { i, two_m: tm }, Gen::J { i: j, two_m: tn }) => {
            let mut out = ModeExpr::zero();
            for l in 1..=3u8 {
                let e = eps(i, j, l);
                if e != 0 {
                    out = out.add(&ModeExpr::term(
                        Gen::J {
                            i: l,
                            two_m: tm + tn,
                        },
                        CKPoly::constant(CycNum::from_integer(e)),
                    ));
                }
            }
            if i == j && tm + tn == 0 {
                // -m k/2.
                out = out.add(&ModeExpr::term(
                    Gen::One,
                    CKPoly::monomial(0, 1, CycNum::from_rational(rat(-tm, 4))),
                ));
            }
            out
        }
    }
}

/// Bilinear extension of the basis bracket. Coefficients are central and
/// commute; the grading sign conventions live in `basis_bracket`.
pub fn bracket_expr(a: &ModeExpr, b: &ModeExpr) -> ModeExpr {
    let mut out = ModeExpr::zero();
    for (ga, pa) in &a.terms {
        for (gb, pb) in &b.terms {
            let base = basis_bracket(ga, gb);
            if !base.is_zero() {
                out = out.add(&base.scale(&pa.mul(pb)));
            }
        }
    }
    out
}

/// Outcome of sweeping the graded Jacobi identity over a window of modes.
#[derive(Debug, Clone)]
pub struct JacobiReport {
    /// Number of ordered triples checked.
    pub triples: usize,
    /// Triples whose residual survives the substitution c = 6k.
    pub failures: Vec<String>,
    /// Triples with a nonzero raw residual (a multiple of c - 6k).
    pub raw_nonzero: usize,
}

fn window_basis(window: i64) -> Vec<Gen> {
    let mut out = Vec::new();
    for m in -window..=window {
        out.push(Gen::l(m));
        for i in 1..=3u8 {
            out.push(Gen::j(i, m));
        }
    }
    let mut two_r = -(2 * window - 1);
    while two_r <= 2 * window - 1 {
        for a in 0..=3u8 {
            out.push(Gen::g(a, two_r));
        }
        two_r += 2;
    }
    out
}

/// Sweeps J(x, y, z) = [x,[y,z]] - [[x,y],z] - (-1)^(|x||y|) [y,[x,z]]
/// over all mode triples in the window. The identity must vanish after
/// substituting c = 6k; raw residuals are counted separately.
pub fn jacobi_check(window: i64) -> JacobiReport {
    let basis = window_basis(window);
    let mut failures = Vec::new();
    let mut raw_nonzero = 0usize;
    let mut triples = 0usize;
    for x in &basis {
        for y in &basis {
            for z in &basis {
                triples += 1;
                let t1 = bracket_expr(&ModeExpr::gen(*x), &basis_bracket(y, z));
                let t2 = bracket_expr(&basis_bracket(x, y), &ModeExpr::gen(*z));
                let mut t3 = bracket_expr(&ModeExpr::gen(*y), &basis_bracket(x, z));
                if x.parity() * y.parity() == 1 {
                    t3 = t3.neg();
                }
                let raw = t1.sub(&t2).sub(&t3);
                if !raw.is_zero() {
                    raw_nonzero += 1;
                }
                if !raw.subst_c_6k().is_zero() {
                    failures.push(format!("{:?}, {:?}, {:?}", x, y, z));
                }
            }
        }
    }
    JacobiReport {
        triples,
        failures,
        raw_nonzero,
    }
}

/// Generators of the diagonalized basis: J = -2i J^1,
/// J^+ = J^2 - i J^3, J^- = -J^2 - i J^3, and the recombined
/// supercurrents
///
///   G^(-,1) = G^0 - i G^1,   G^(+,2) = G^0 + i G^1,
///   G^(+,1) = -G^2 + i G^3,  G^(-,2) = G^2 + i G^3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimedGen {
    L { two_m: i64 },
    J { two_m: i64 },
    JPlus { two_m: i64 },
    JMinus { two_m: i64 },
    /// sign is +1 or -1, idx is 1 or 2, two_r is the doubled half-odd mode.
    G { sign: i8, idx: u8, two_r: i64 },
}

impl PrimedGen {
    pub fn l(m: i64) -> Self {
        PrimedGen::L { two_m: 2 * m }
    }

    pub fn j(m: i64) -> Self {
        PrimedGen::J { two_m: 2 * m }
    }

    pub fn j_plus(m: i64) -> Self {
        PrimedGen::JPlus { two_m: 2 * m }
    }

    pub fn j_minus(m: i64) -> Self {
        PrimedGen::JMinus { two_m: 2 * m }
    }

    pub fn g(sign: i8, idx: u8, two_r: i64) -> Self {
        assert!(sign == 1 || sign == -1);
        assert!(idx == 1 || idx == 2);
        assert!(two_r.rem_euclid(2) == 1);
        PrimedGen::G { sign, idx, two_r }
    }

    /// Expansion over the unprimed basis.
    pub fn expand(&self) -> ModeExpr {
        let i_unit = CycNum::i();
        match *self {
            PrimedGen::L { two_m } => ModeExpr::gen(Gen::L { two_m }),
            PrimedGen::J { two_m } => ModeExpr::term(
                Gen::J { i: 1, two_m },
                CKPoly::constant((-&i_unit).scale(&rat_int(2))),
            ),
            PrimedGen::JPlus { two_m } => {
                ModeExpr::gen(Gen::J { i: 2, two_m }).add(&ModeExpr::term(
                    Gen::J { i: 3, two_m },
                    CKPoly::constant(-&i_unit),
                ))
            }
            PrimedGen::JMinus { two_m } => ModeExpr::term(
                Gen::J { i: 2, two_m },
                CKPoly::constant(-&CycNum::one()),
            )
            .add(&ModeExpr::term(
                Gen::J { i: 3, two_m },
                CKPoly::constant(-&i_unit),
            )),
            PrimedGen::G { sign, idx, two_r } => {
                let (a0, c0, a1, c1): (u8, CycNum, u8, CycNum) = match (sign, idx) {
                    (-1, 1) => (0, CycNum::one(), 1, -&i_unit),
                    (1, 2) => (0, CycNum::one(), 1, i_unit.clone()),
                    (1, 1) => (2, -&CycNum::one(), 3, i_unit.clone()),
                    (-1, 2) => (2, CycNum::one(), 3, i_unit.clone()),
                    _ => unreachable!(),
                };
                ModeExpr::term(Gen::G { a: a0, two_r }, CKPoly::constant(c0)).add(
                    &ModeExpr::term(Gen::G { a: a1, two_r }, CKPoly::constant(c1)),
                )
            }
        }
    }
}

/// Bracket of two diagonalized-basis generators, expanded over the
/// unprimed basis.
pub fn primed_bracket(x: &PrimedGen, y: &PrimedGen) -> ModeExpr {
    bracket_expr(&x.expand(), &y.expand())
}

/// Spectral flow by an integer amount on the unprimed even sector:
///
///   L_n  -> L_n + (l/2) J_n + (l^2 k / 4) delta_(n,0)
///   J_n  -> J_n + l k delta_(n,0)          (J the diagonalized current)
///   J^+- -> modes shifted by +-l
///
/// G modes are outside the flowed sector here and are rejected.
pub fn flow_gen(g: &Gen, ell: i64) -> Result<ModeExpr, AlgebraError> {
    let i_unit = CycNum::i();
    let half = rat(1, 2);
    Ok(match *g {
        Gen::One => ModeExpr::gen(Gen::One),
        Gen::L { two_m } => {
            // L_n + (l/2) (-2i J^1_n) + l^2 k/4 delta.
            let mut out = ModeExpr::gen(Gen::L { two_m });
            let coeff = (-&i_unit).scale(&rat_int(ell));
            out = out.add(&ModeExpr::term(
                Gen::J { i: 1, two_m },
                CKPoly::constant(coeff),
            ));
            if two_m == 0 {
                out = out.add(&ModeExpr::term(
                    Gen::One,
                    CKPoly::monomial(0, 1, CycNum::from_rational(rat(ell * ell, 4))),
                ));
            }
            out
        }
        Gen::J { i: 1, two_m } => {
            // From J -> J + l k delta with J = -2i J^1: J^1 gains i l k / 2.
            let mut out = ModeExpr::gen(Gen::J { i: 1, two_m });
            if two_m == 0 {
                let coeff = i_unit.scale(&(&rat_int(ell) * &half));
                out = out.add(&ModeExpr::term(Gen::One, CKPoly::monomial(0, 1, coeff)));
            }
            out
        }
        Gen::J { i: 2, two_m } => {
            // J^2 = (J^+ - J^-)/2 with J^+- modes shifted by +-l.
            let up = two_m + 2 * ell;
            let dn = two_m - 2 * ell;
            let jplus = PrimedGen::JPlus { two_m: up }.expand();
            let jminus = PrimedGen::JMinus { two_m: dn }.expand();
            jplus
                .sub(&jminus)
                .scale(&CKPoly::constant(CycNum::from_rational(half.clone())))
        }
        Gen::J { i: 3, two_m } => {
            // J^3 = i (J^+ + J^-)/2.
            let up = two_m + 2 * ell;
            let dn = two_m - 2 * ell;
            let jplus = PrimedGen::JPlus { two_m: up }.expand();
            let jminus = PrimedGen::JMinus { two_m: dn }.expand();
            jplus
                .add(&jminus)
                .scale(&CKPoly::constant(i_unit.scale(&half)))
        }
        _ => return Err(AlgebraError::UnsupportedMode),
    })
}

/// Linear extension of the flow to expressions on the even sector.
pub fn flow_expr(e: &ModeExpr, ell: i64) -> Result<ModeExpr, AlgebraError> {
    let mut out = ModeExpr::zero();
    for (g, p) in e.terms() {
        out = out.add(&flow_gen(g, ell)?.scale(p));
    }
    Ok(out)
}

/// Spectral flow of a diagonalized-basis generator.
pub fn spectral_flow(g: &PrimedGen, ell: i64) -> Result<ModeExpr, AlgebraError> {
    if let PrimedGen::G { .. } = g {
        return Err(AlgebraError::UnsupportedMode);
    }
    flow_expr(&g.expand(), ell)
}

/// Report on the square of A = G^(+,1)_(-1/2) + G^(-,2)_(1/2).
#[derive(Debug, Clone)]
pub struct LemmaReport {
    /// A^2 as an expression over the unprimed basis.
    pub square: ModeExpr,
    /// Basis symbols carrying nonzero coefficients.
    pub support: Vec<Gen>,
    /// Sign s in A^2 = s * 2 * (2 L_0 - J_0).
    pub factored_sign: i64,
    /// Coefficient magnitudes of (L_0, J_0) after factoring out s * 2.
    pub magnitudes: (Rat, Rat),
    /// Whether A^2 equals factored_sign * 2 * (2 sigma^(-1)(L_0 - c/24))
    /// after substituting c = 6k.
    pub matches_flowed: bool,
}

/// Squares A = G^(+,1)_(-1/2) + G^(-,2)_(1/2) and factors the result
/// against 2 L_0 - J_0 and its spectral flow origin.
pub fn lemma_g0_square() -> LemmaReport {
    let a = PrimedGen::g(1, 1, -1)
        .expand()
        .add(&PrimedGen::g(-1, 2, 1).expand());
    // A^2 = {A, A} / 2 for an odd element.
    let square = bracket_expr(&a, &a).scale(&CKPoly::constant(CycNum::from_rational(rat(1, 2))));

    let two_l0_minus_j0 = ModeExpr::gen(Gen::l(0))
        .scale_cyc(&CycNum::from_integer(2))
        .sub(&PrimedGen::j(0).expand());
    let sign = if square == two_l0_minus_j0.scale_cyc(&CycNum::from_integer(2)) {
        1
    } else if square == two_l0_minus_j0.scale_cyc(&CycNum::from_integer(-2)) {
        -1
    } else {
        0
    };

    let flowed = flow_expr(
        &ModeExpr::gen(Gen::l(0)).sub(&ModeExpr::term(
            Gen::One,
            CKPoly::monomial(1, 0, CycNum::from_rational(rat(1, 24))),
        )),
        -1,
    )
    .expect("even sector flows");
    let matches_flowed = square.subst_c_6k()
        == flowed
            .subst_c_6k()
            .scale_cyc(&CycNum::from_integer(4 * sign));

    // Magnitudes of the (L_0, J^1-part mapped back to J_0) coefficients
    // after factoring out sign * 2.
    let normalized = square.scale_cyc(&CycNum::from_rational(rat(sign, 2)));
    let l_mag = normalized
        .coeff(&Gen::l(0))
        .eval(&CycNum::zero(), &CycNum::zero())
        .as_rational()
        .unwrap_or_else(|| Rat::from_integer(0.into()));
    // J_0 = -2i J^1_0: coefficient of J_0 is i/2 times that of J^1_0.
    let j1 = normalized
        .coeff(&Gen::j(1, 0))
        .eval(&CycNum::zero(), &CycNum::zero());
    let j_mag = (&(&j1 * &CycNum::i()) * &CycNum::from_rational(rat(1, 2)))
        .as_rational()
        .unwrap_or_else(|| Rat::from_integer(0.into()));

    LemmaReport {
        support: square.support(),
        square,
        factored_sign: sign,
        magnitudes: (
            if l_mag < Rat::from_integer(0.into()) { -l_mag } else { l_mag },
            if j_mag < Rat::from_integer(0.into()) { -j_mag } else { j_mag },
        ),
        matches_flowed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_reference_values() {
        assert_eq!(alpha(1, 1, 0), rat(1, 2));
        assert_eq!(alpha(1, 2, 3), rat(1, 2));
        assert_eq!(alpha(2, 2, 2), rat(0, 1));
        for i in 1..=3u8 {
            for a in 0..=3u8 {
                for b in 0..=3u8 {
                    assert_eq!(alpha(i, a, b), -alpha(i, b, a), "alpha antisymmetry");
                }
            }
        }
    }

    #[test]
    fn bracket_reference_examples() {
        let lhs = basis_bracket(&Gen::l(1), &Gen::l(-1));
        let expect = ModeExpr::gen(Gen::l(0)).scale_cyc(&CycNum::from_integer(2));
        assert_eq!(lhs, expect);

        let lhs = basis_bracket(&Gen::g(0, 1), &Gen::g(0, -1));
        let expect = ModeExpr::gen(Gen::l(0)).scale_cyc(&CycNum::from_integer(2));
        assert_eq!(lhs, expect);

        let lhs = basis_bracket(&Gen::l(2), &Gen::l(-2));
        let expect = ModeExpr::gen(Gen::l(0))
            .scale_cyc(&CycNum::from_integer(4))
            .add(&ModeExpr::term(
                Gen::One,
                CKPoly::monomial(1, 0, CycNum::from_rational(rat(1, 2))),
            ));
        assert_eq!(lhs, expect);
    }

    #[test]
    fn graded_antisymmetry_over_window() {
        let basis = window_basis(2);
        for x in &basis {
            for y in &basis {
                let fwd = basis_bracket(x, y);
                let mut bwd = basis_bracket(y, x).neg();
                if x.parity() * y.parity() == 1 {
                    bwd = bwd.neg();
                }
                assert_eq!(fwd, bwd, "pair {:?}, {:?}", x, y);
            }
        }
    }

    #[test]
    fn jacobi_holds_at_c_equals_6k() {
        let report = jacobi_check(2);
        assert_eq!(report.triples, 36 * 36 * 36);
        assert!(
            report.failures.is_empty(),
            "failures: {:?}",
            &report.failures[..report.failures.len().min(5)]
        );
        assert!(report.raw_nonzero > 0, "central terms tie c to 6k");
    }

    #[test]
    fn primed_subalgebra_table() {
        let k = CKPoly::k;
        // [J_m, J_n] = 2 k m delta.
        for m in -2..=2i64 {
            for n in -2..=2i64 {
                let lhs = primed_bracket(&PrimedGen::j(m), &PrimedGen::j(n));
                let expect = if m + n == 0 {
                    ModeExpr::term(Gen::One, k().scale(&CycNum::from_integer(2 * m)))
                } else {
                    ModeExpr::zero()
                };
                assert_eq!(lhs, expect, "JJ at ({}, {})", m, n);
            }
        }
        // [J_m, J^+-_n] = +-2 J^+-_(m+n).
        for m in -1..=1i64 {
            for n in -1..=1i64 {
                let lhs = primed_bracket(&PrimedGen::j(m), &PrimedGen::j_plus(n));
                assert_eq!(
                    lhs,
                    PrimedGen::j_plus(m + n)
                        .expand()
                        .scale_cyc(&CycNum::from_integer(2))
                );
                let lhs = primed_bracket(&PrimedGen::j(m), &PrimedGen::j_minus(n));
                assert_eq!(
                    lhs,
                    PrimedGen::j_minus(m + n)
                        .expand()
                        .scale_cyc(&CycNum::from_integer(-2))
                );
            }
        }
        // [J^+_m, J^-_n] = J_(m+n) + m k delta.
        for m in -2..=2i64 {
            for n in -2..=2i64 {
                let lhs = primed_bracket(&PrimedGen::j_plus(m), &PrimedGen::j_minus(n));
                let mut expect = PrimedGen::j(m + n).expand();
                if m + n == 0 {
                    expect = expect.add(&ModeExpr::term(
                        Gen::One,
                        k().scale(&CycNum::from_integer(m)),
                    ));
                }
                assert_eq!(lhs, expect, "+- at ({}, {})", m, n);
            }
        }
        // [L_m, J_n] = -n J_(m+n).
        for m in -1..=1i64 {
            for n in -2..=2i64 {
                let lhs = primed_bracket(&PrimedGen::l(m), &PrimedGen::j(n));
                let expect = PrimedGen::j(m + n)
                    .expand()
                    .scale_cyc(&CycNum::from_integer(-n));
                assert_eq!(lhs, expect);
            }
        }
    }

    #[test]
    fn primed_supercurrent_charges() {
        // [J_0, G^(+-,x)_r] = +- G^(+-,x)_r.
        for &(sign, idx) in &[(1i8, 1u8), (1, 2), (-1, 1), (-1, 2)] {
            for two_r in [-3i64, -1, 1, 3] {
                let g = PrimedGen::g(sign, idx, two_r);
                let lhs = primed_bracket(&PrimedGen::j(0), &g);
                let expect = g.expand().scale_cyc(&CycNum::from_integer(sign as i64));
                assert_eq!(lhs, expect, "charge of {:?}", g);
            }
        }
    }

    #[test]
    fn flow_examples_and_round_trip() {
        // sigma^1(L_0) = L_0 + J_0/2 + k/4.
        let lhs = spectral_flow(&PrimedGen::l(0), 1).unwrap();
        let expect = ModeExpr::gen(Gen::l(0))
            .add(&PrimedGen::j(0).expand().scale_cyc(&CycNum::from_rational(rat(1, 2))))
            .add(&ModeExpr::term(
                Gen::One,
                CKPoly::monomial(0, 1, CycNum::from_rational(rat(1, 4))),
            ));
        assert_eq!(lhs, expect);

        // sigma^(-1)(L_0 - c/24) = L_0 - J_0/2 once c = 6k.
        let arg = ModeExpr::gen(Gen::l(0)).sub(&ModeExpr::term(
            Gen::One,
            CKPoly::monomial(1, 0, CycNum::from_rational(rat(1, 24))),
        ));
        let lhs = flow_expr(&arg, -1).unwrap().subst_c_6k();
        let expect = ModeExpr::gen(Gen::l(0))
            .sub(&PrimedGen::j(0).expand().scale_cyc(&CycNum::from_rational(rat(1, 2))))
            .subst_c_6k();
        assert_eq!(lhs, expect);

        // Round trip on every even-sector mode.
        for ell in [-2i64, -1, 1, 2] {
            for m in -2..=2i64 {
                for g in [Gen::l(m), Gen::j(1, m), Gen::j(2, m), Gen::j(3, m)] {
                    let there = flow_gen(&g, ell).unwrap();
                    let back = flow_expr(&there, -ell).unwrap();
                    assert_eq!(back, ModeExpr::gen(g), "round trip {:?}", g);
                }
            }
        }
    }

    #[test]
    fn flow_preserves_primed_brackets() {
        let gens: Vec<PrimedGen> = (-2..=2)
            .flat_map(|m| {
                [
                    PrimedGen::l(m),
                    PrimedGen::j(m),
                    PrimedGen::j_plus(m),
                    PrimedGen::j_minus(m),
                ]
            })
            .collect();
        for ell in [-1i64, 1, 2] {
            for x in &gens {
                for y in &gens {
                    let direct = flow_expr(&primed_bracket(x, y), ell).unwrap();
                    let flowed = bracket_expr(
                        &spectral_flow(x, ell).unwrap(),
                        &spectral_flow(y, ell).unwrap(),
                    );
                    assert_eq!(direct, flowed, "pair {:?}, {:?}, ell {}", x, y, ell);
                }
            }
        }
    }

    #[test]
    fn flow_rejects_supercurrents() {
        let err = spectral_flow(&PrimedGen::g(1, 1, 1), 1).unwrap_err();
        assert_eq!(err, AlgebraError::UnsupportedMode);
        assert_eq!(err.to_string(), "unsupported mode");
    }

    #[test]
    fn supercurrent_square_lemma() {
        let report = lemma_g0_square();
        assert_eq!(report.support, vec![Gen::l(0), Gen::j(1, 0)]);
        assert_eq!(report.factored_sign, -1);
        assert_eq!(report.magnitudes, (rat(2, 1), rat(1, 1)));
        assert!(report.matches_flowed);
        // No central contribution at all, even before c = 6k.
        assert!(report.square.coeff(&Gen::One).is_zero());
    }
}
