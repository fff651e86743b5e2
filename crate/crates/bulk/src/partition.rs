//! Partition vectors of bulk decompositions and their modular checks.
//!
//! A bulk space is a sum of products N' (x) N''. Folding summands with equal
//! characters gives a small vector of graded traces,
//!
//! | entry | trace                                   |
//! |-------|-----------------------------------------|
//! | 0     | NS-NS sector, unsigned                  |
//! | 1     | NS-NS sector, with the parity operator  |
//! | 2     | R-R sector, unsigned                    |
//! | 3     | R-R sector, with the parity operator    |
//!
//! Bosonic decompositions populate entry 0 only. Each entry is a list of
//! product terms holo (x) anti. The antiholomorphic factor of a physical
//! trace is the stored series taken at (-u bar, -tau bar); numerically that
//! equals the conjugate of an evaluation with conjugated coefficients at
//! (u, tau), so both factors are stored as ordinary series.
//!
//! The checks implemented here:
//!
//! * S invariance, numerically at sample points: the vector at
//!   (u/tau, -1/tau) equals a fixed permutation matrix times the vector at
//!   (u, tau), up to an exact exponential multiplier when u is nonzero.
//! * T invariance, symbolically: when every factor has a constant q-exponent
//!   residue mod 1, the shift tau -> tau + 1 multiplies each product term by
//!   a 24th root of unity, and the signed entries must absorb it.
//! * T invariance by phases, numerically: when residues mix (the quasi
//!   examples), each term is twisted by its own exact phase and the twisted
//!   sum is compared with the permuted vector at high-imaginary points.
//! * Positivity of the unsigned NS-NS trace for diagonal decompositions.
//! * The grade congruence test: summand by summand, (|g'|^2 - |g''|^2)/2
//!   mod 1 must be 0 on parity-even NS-NS summands, 1/2 on parity-odd ones,
//!   and 0 on all R-R summands; together with reality of the right-factor
//!   S-matrix this certifies a potential bulk theory.

use std::collections::BTreeMap;
use std::sync::Mutex;

use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::Serialize;

use vosa_core::characters::{lattice_vosa_character, CharacterError};
use vosa_core::cyclotomic::{rat, rat_int, CycNum, Rat};
use vosa_core::lattices::{dot, lattice_smatrix, LatticeError, SignCharacter};
use vosa_core::series::{EvalPoint, JacobiSeries, Q64, SeriesError};

use crate::decomp::{BulkDecomposition, BulkError, Sector, SideFactor, SideKind};
use crate::CheckReport;

/// One grouped product term of a partition vector entry.
#[derive(Clone)]
pub struct PartitionTerm {
    pub left_kind: SideKind,
    pub right_kind: SideKind,
    /// Number of summands folded into this term.
    pub count: i64,
    /// Holomorphic factor; the multiplicity is folded into its coefficients.
    pub holo: JacobiSeries,
    /// Antiholomorphic factor as a stored series.
    pub anti: JacobiSeries,
}

/// The four graded traces of a bulk decomposition, truncated uniformly.
#[derive(Clone)]
pub struct PartitionVector {
    pub example: String,
    pub central_charge: i64,
    pub is_super: bool,
    pub quasi: bool,
    /// True when the sides carry an elliptic marking.
    pub marked: bool,
    /// Common truncation of every stored factor, in 1/24 units.
    pub trunc24: i64,
    /// 0: NS-NS unsigned, 1: NS-NS signed, 2: R-R unsigned, 3: R-R signed.
    pub entries: [Vec<PartitionTerm>; 4],
}

impl PartitionVector {
    /// Locates the folded term with the given factor kinds, if present.
    pub fn find_term(&self, entry: usize, left: &SideKind, right: &SideKind) -> Option<&PartitionTerm> {
        let lk = canonical_kind(left);
        let rk = canonical_kind(right);
        self.entries[entry]
            .iter()
            .find(|t| t.left_kind == lk && t.right_kind == rk)
    }
}

/// Canonical representative of a factor kind under coordinate permutations
/// that preserve its character: digit strings are sorted, except that a
/// marked first digit stays in place.
pub fn canonical_kind(kind: &SideKind) -> SideKind {
    fn sorted(digits: &[u8]) -> Vec<u8> {
        let mut d = digits.to_vec();
        d.sort_unstable();
        d
    }
    match kind {
        SideKind::A1Digits { digits, marked: true } => {
            let mut d = vec![digits[0]];
            d.extend(sorted(&digits[1..]));
            SideKind::A1Digits { digits: d, marked: true }
        }
        SideKind::A1Digits { digits, marked: false } => {
            SideKind::A1Digits { digits: sorted(digits), marked: false }
        }
        SideKind::LClass { digits } => SideKind::LClass { digits: sorted(digits) },
        SideKind::TernaryNS { digits } => SideKind::TernaryNS { digits: sorted(digits) },
        SideKind::TernaryR { digits } => SideKind::TernaryR { digits: sorted(digits) },
        other => other.clone(),
    }
}

/// Short printable label for a factor kind.
pub fn kind_label(kind: &SideKind) -> String {
    fn ds(digits: &[u8]) -> String {
        digits.iter().map(|d| char::from(b'0' + d)).collect()
    }
    match kind {
        SideKind::DCoset { m, label } => format!("D{m}[{label}]"),
        SideKind::DFermion { dm, dlabel, fm, flabel } => {
            format!("D{dm}[{dlabel}]F{fm}[{flabel}]")
        }
        SideKind::A1Digits { digits, marked } => {
            format!("A[{}]{}", ds(digits), if *marked { "*" } else { "" })
        }
        SideKind::LClass { digits } => format!("L[{}]", ds(digits)),
        SideKind::TernaryNS { digits } => format!("K[{}]", ds(digits)),
        SideKind::TernaryR { digits } => format!("K[{}]+h", ds(digits)),
    }
}

// Character cache across examples: permutation-equivalent factors share one
// entry, keyed by canonical kind, sign data, and truncation.
static SIDE_CACHE: Mutex<BTreeMap<String, JacobiSeries>> = Mutex::new(BTreeMap::new());
static ASSEMBLY_CACHE: Mutex<BTreeMap<(String, i64), PartitionVector>> = Mutex::new(BTreeMap::new());

fn side_series(
    b: &BulkDecomposition,
    side: &SideFactor,
    left: bool,
    minus: bool,
    t24: i64,
) -> Result<JacobiSeries, BulkError> {
    let ck = canonical_kind(&side.kind);
    let sign_tag = if minus {
        format!("{:?}", side.minus_char)
    } else {
        "+".to_string()
    };
    let key = format!("{ck:?}|{sign_tag}|{t24}");
    if let Some(s) = SIDE_CACHE.lock().expect("cache lock").get(&key) {
        return Ok(s.clone());
    }
    let coset = b.resolve(side, left);
    let marking = b.resolve_marking(side, left)?;
    let sign = if minus {
        side.minus_char.clone()
    } else {
        SignCharacter::Trivial
    };
    let s = lattice_vosa_character(&coset, marking.as_ref(), &sign, Q64::new(t24, 24))?;
    SIDE_CACHE.lock().expect("cache lock").insert(key, s.clone());
    Ok(s)
}

/// Summands of one sector grouped by canonical factor kinds. Values are
/// (multiplicity, index of a representative summand).
fn grouped(b: &BulkDecomposition, sector: Sector) -> BTreeMap<(SideKind, SideKind), (i64, usize)> {
    let mut groups: BTreeMap<(SideKind, SideKind), (i64, usize)> = BTreeMap::new();
    for (idx, s) in b.summands.iter().enumerate() {
        if s.sector != sector {
            continue;
        }
        let key = (canonical_kind(&s.left.kind), canonical_kind(&s.right.kind));
        groups
            .entry(key)
            .and_modify(|(c, _)| *c += 1)
            .or_insert((1, idx));
    }
    groups
}

/// Assembles the partition vector at the given truncation. Equal factors are
/// folded with multiplicities; the signed and unsigned lists of a sector are
/// index-aligned.
pub fn assemble_partition(b: &BulkDecomposition, t24: i64) -> Result<PartitionVector, BulkError> {
    let mut entries: [Vec<PartitionTerm>; 4] = std::array::from_fn(|_| Vec::new());
    let marked = b.summands.iter().any(|s| s.left.marking.is_some());
    for (sector, slot) in [(Sector::NsNs, 0usize), (Sector::RR, 2usize)] {
        for ((lk, rk), (count, idx)) in grouped(b, sector) {
            let s = &b.summands[idx];
            let mult = rat_int(count);
            let holo = side_series(b, &s.left, true, false, t24)?;
            let anti = side_series(b, &s.right, false, false, t24)?;
            entries[slot].push(PartitionTerm {
                left_kind: lk.clone(),
                right_kind: rk.clone(),
                count,
                holo: holo.scalar_rat(&mult),
                anti,
            });
            if b.is_super {
                let holo_m = side_series(b, &s.left, true, true, t24)?;
                let anti_m = side_series(b, &s.right, false, true, t24)?;
                entries[slot + 1].push(PartitionTerm {
                    left_kind: lk,
                    right_kind: rk,
                    count,
                    holo: holo_m.scalar_rat(&mult),
                    anti: anti_m,
                });
            }
        }
        if !b.is_super {
            break;
        }
    }
    Ok(PartitionVector {
        example: b.example.clone(),
        central_charge: b.central_charge,
        is_super: b.is_super,
        quasi: b.quasi,
        marked,
        trunc24: t24,
        entries,
    })
}

/// Cached assembly keyed by example id and truncation.
pub fn assemble_cached(b: &BulkDecomposition, t24: i64) -> Result<PartitionVector, BulkError> {
    let key = (b.example.clone(), t24);
    if let Some(pv) = ASSEMBLY_CACHE.lock().expect("cache lock").get(&key) {
        return Ok(pv.clone());
    }
    let pv = assemble_partition(b, t24)?;
    ASSEMBLY_CACHE
        .lock()
        .expect("cache lock")
        .insert(key, pv.clone());
    Ok(pv)
}

// ---------------------------------------------------------------------------
// Numeric evaluation.
// ---------------------------------------------------------------------------

fn eval_factor(
    s: &JacobiSeries,
    p: &EvalPoint,
    anti: bool,
    tol: f64,
) -> Result<(Complex64, f64), BulkError> {
    let r = s.eval_numeric(p, anti, tol)?;
    let v = if anti { r.value.conj() } else { r.value };
    Ok((v, r.tail_bound))
}

/// Value and certified error of holo (x) anti at a point. The anti factor is
/// realized at (-u bar, -tau bar) via conjugate-coefficient evaluation.
pub fn eval_pair(
    holo: &JacobiSeries,
    anti: &JacobiSeries,
    p: &EvalPoint,
    tol: f64,
) -> Result<(Complex64, f64), BulkError> {
    let (vh, th) = eval_factor(holo, p, false, tol)?;
    let (va, ta) = eval_factor(anti, p, true, tol)?;
    Ok((vh * va, vh.norm() * ta + va.norm() * th + th * ta))
}

/// Value and certified error of a full entry at a point.
pub fn eval_entry(
    terms: &[PartitionTerm],
    p: &EvalPoint,
    tol: f64,
) -> Result<(Complex64, f64), BulkError> {
    let mut value = Complex64::new(0.0, 0.0);
    let mut cert = 0.0f64;
    for t in terms {
        let (v, c) = eval_pair(&t.holo, &t.anti, p, tol)?;
        value += v;
        cert += c;
    }
    Ok((value, cert))
}

// ---------------------------------------------------------------------------
// S and T data.
// ---------------------------------------------------------------------------

/// Permutation matrix of the S action on (NS+, NS-, RR+, RR-): it swaps the
/// signed NS-NS trace with the unsigned R-R trace.
pub const BOLD_S: [[i64; 4]; 4] = [
    [1, 0, 0, 0],
    [0, 0, 1, 0],
    [0, 1, 0, 0],
    [0, 0, 0, 1],
];

/// Permutation matrix of the T action: it swaps the two NS-NS traces and
/// fixes both R-R traces.
pub const BOLD_T: [[i64; 4]; 4] = [
    [0, 1, 0, 0],
    [1, 0, 0, 0],
    [0, 0, 1, 0],
    [0, 0, 0, 1],
];

/// Sector-permutation matrices together with the exact S-matrix of the
/// right-factor representative lattice.
#[derive(Clone)]
pub struct STData {
    pub bold_s: [[i64; 4]; 4],
    pub bold_t: [[i64; 4]; 4],
    pub lattice_s: Vec<Vec<CycNum>>,
    pub lattice_s_real: bool,
}

/// Builds the S/T data of a decomposition.
pub fn st_data(b: &BulkDecomposition) -> Result<STData, BulkError> {
    let s = lattice_smatrix(&b.right_rep)?;
    let real = s.iter().flatten().all(|e| e == &e.conj());
    Ok(STData {
        bold_s: BOLD_S,
        bold_t: BOLD_T,
        lattice_s: s,
        lattice_s_real: real,
    })
}

fn mat_mul(a: &[[i64; 4]; 4], b: &[[i64; 4]; 4]) -> [[i64; 4]; 4] {
    let mut out = [[0i64; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

/// Exact checks: S^2 = T^2 = (ST)^3 = identity as permutation matrices.
pub fn bold_relations_hold() -> bool {
    let id = [
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ];
    let st = mat_mul(&BOLD_S, &BOLD_T);
    mat_mul(&BOLD_S, &BOLD_S) == id
        && mat_mul(&BOLD_T, &BOLD_T) == id
        && mat_mul(&st, &mat_mul(&st, &st)) == id
}

/// Exact unitarity of a lattice S-matrix: S S-bar-transpose = identity.
pub fn lattice_s_unitary(s: &[Vec<CycNum>]) -> bool {
    let n = s.len();
    for i in 0..n {
        for j in 0..n {
            let mut acc = CycNum::zero();
            for k in 0..n {
                acc = &acc + &(&s[i][k] * &s[j][k].conj());
            }
            let expect = if i == j { CycNum::one() } else { CycNum::zero() };
            if acc != expect {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Modular checks.
// ---------------------------------------------------------------------------

/// Default sample points: both tau and -1/tau keep Im at least 1/2.
pub fn default_points() -> Vec<EvalPoint> {
    vec![
        EvalPoint::tau_only(Complex64::new(0.0, 1.0)),
        EvalPoint::tau_only(Complex64::new(0.5, 0.75f64.sqrt())),
        EvalPoint::tau_only(Complex64::new(0.3, 0.9)),
    ]
}

/// A sample point with nonzero elliptic variable, for marked decompositions.
pub fn refined_point() -> EvalPoint {
    EvalPoint {
        u: Complex64::new(0.1, 0.05),
        tau: Complex64::new(0.3, 0.9),
    }
}

/// Multiplier compensating the Gaussian factor of the S transform when the
/// elliptic variable is nonzero: exp(-2 pi i (c/6)(u^2/tau - ubar^2/taubar)).
/// Each side carries theta index c/6, matching the genus normalization.
pub fn s_multiplier(c: i64, p: &EvalPoint) -> Complex64 {
    let d = p.u * p.u / p.tau - (p.u.conj() * p.u.conj()) / p.tau.conj();
    let k = c as f64 / 6.0;
    (-Complex64::i() * 2.0 * std::f64::consts::PI * k * d).exp()
}

fn is_insufficient(e: &BulkError) -> bool {
    matches!(
        e,
        BulkError::InsufficientTruncation
            | BulkError::Series(SeriesError::InsufficientTruncation)
            | BulkError::Character(CharacterError::Series(SeriesError::InsufficientTruncation))
            | BulkError::Character(CharacterError::Lattice(LatticeError::Series(
                SeriesError::InsufficientTruncation
            )))
            | BulkError::Lattice(LatticeError::Series(SeriesError::InsufficientTruncation))
    )
}

fn base_trunc(b: &BulkDecomposition) -> i64 {
    if b.quasi {
        240
    } else {
        384
    }
}

const TRUNC_CAP: i64 = 1536;

fn with_escalation<T>(
    b: &BulkDecomposition,
    base: i64,
    f: impl Fn(&PartitionVector) -> Result<T, BulkError>,
) -> Result<T, BulkError> {
    let mut t24 = base;
    loop {
        let pv = assemble_cached(b, t24)?;
        match f(&pv) {
            Err(e) if is_insufficient(&e) && t24 * 2 <= TRUNC_CAP => t24 *= 2,
            other => return other,
        }
    }
}

/// Maximum normalized S residual of the vector identity over the points.
fn s_residual(pv: &PartitionVector, points: &[EvalPoint], tol: f64) -> Result<f64, BulkError> {
    let dims = if pv.is_super { 4 } else { 1 };
    let tol_each = (tol * 1e-5).max(1e-14);
    let mut worst = 0.0f64;
    for p0 in points {
        let p = if pv.marked {
            *p0
        } else {
            EvalPoint::tau_only(p0.tau)
        };
        let ps = EvalPoint {
            u: p.u / p.tau,
            tau: Complex64::new(-1.0, 0.0) / p.tau,
        };
        let mult = s_multiplier(pv.central_charge, &p);
        let mut here = [Complex64::new(0.0, 0.0); 4];
        let mut image = [Complex64::new(0.0, 0.0); 4];
        let mut cert = 0.0f64;
        for i in 0..dims {
            let (v, c1) = eval_entry(&pv.entries[i], &p, tol_each)?;
            let (w, c2) = eval_entry(&pv.entries[i], &ps, tol_each)?;
            here[i] = v;
            image[i] = w;
            cert += c1 + c2;
        }
        if cert > tol * 0.5 {
            return Err(BulkError::InsufficientTruncation);
        }
        for i in 0..dims {
            let mixed: Complex64 = (0..dims)
                .map(|j| BOLD_S[i][j] as f64 * image[j])
                .sum();
            let resid = (here[i] - mult * mixed).norm() / here[i].norm().max(1.0);
            worst = worst.max(resid);
        }
    }
    Ok(worst)
}

/// The constant residue mod 24 of the stored q-exponents, or an error text
/// locating the first mixed term. Empty series have no residue.
fn series_class(s: &JacobiSeries) -> Result<Option<i64>, String> {
    let mut class: Option<i64> = None;
    for (&(qe, ze), _) in s.terms() {
        let r = qe.rem_euclid(24);
        match class {
            None => class = Some(r),
            Some(r0) if r0 != r => {
                return Err(format!(
                    "mixed q-classes {r0} and {r} at q^{qe}/24 z^{ze}/6"
                ))
            }
            _ => {}
        }
    }
    Ok(class)
}

/// The exact scalar eps with minus = eps * plus, or the first offending term.
fn scalar_ratio(plus: &JacobiSeries, minus: &JacobiSeries) -> Result<CycNum, String> {
    let Some((&(qe, ze), c0)) = plus.terms().next() else {
        return if minus.terms().next().is_none() {
            Ok(CycNum::one())
        } else {
            Err("signed series has support outside the unsigned one".into())
        };
    };
    if minus.terms().next().is_none() {
        return Err("signed series vanishes while the unsigned one does not".into());
    }
    let inv = c0.inverse().expect("leading coefficient invertible");
    let eps = &minus.coeff(qe, ze) * &inv;
    let scaled = plus.scalar(&eps);
    if *minus == scaled {
        return Ok(eps);
    }
    let diff = minus.sub(&scaled).expect("equal truncations");
    let at = diff
        .terms()
        .next()
        .map(|(&(q, z), _)| format!("q^{q}/24 z^{z}/6"))
        .unwrap_or_else(|| "truncation".into());
    Err(format!("not a scalar multiple; first deviation at {at}"))
}

/// Exact T verification for decompositions whose factors live in single
/// q-classes mod 1: every NS-NS group must absorb its 24th-root phase into
/// the parity sign, and every R-R group must carry trivial phase.
fn t_symbolic(pv: &PartitionVector) -> Result<(), String> {
    let fail = |lk: &SideKind, rk: &SideKind, msg: String| {
        format!("{} (x) {}: {}", kind_label(lk), kind_label(rk), msg)
    };
    for j in 0..pv.entries[0].len() {
        let plus = &pv.entries[0][j];
        let (Some(rh), Some(ra)) = (
            series_class(&plus.holo).map_err(|m| fail(&plus.left_kind, &plus.right_kind, m))?,
            series_class(&plus.anti).map_err(|m| fail(&plus.left_kind, &plus.right_kind, m))?,
        ) else {
            continue;
        };
        let delta = (rh - ra).rem_euclid(24);
        if !pv.is_super {
            if delta != 0 {
                return Err(fail(
                    &plus.left_kind,
                    &plus.right_kind,
                    format!("T phase exponent {delta}/24 on a bosonic term"),
                ));
            }
            continue;
        }
        let minus = &pv.entries[1][j];
        let eps_h = scalar_ratio(&plus.holo, &minus.holo)
            .map_err(|m| fail(&plus.left_kind, &plus.right_kind, m))?;
        let eps_a = scalar_ratio(&plus.anti, &minus.anti)
            .map_err(|m| fail(&plus.left_kind, &plus.right_kind, m))?;
        let zeta = CycNum::root_of_unity(delta);
        let eps = &eps_h * &eps_a;
        if zeta != eps || &zeta * &eps != CycNum::one() {
            return Err(fail(
                &plus.left_kind,
                &plus.right_kind,
                format!("T phase {delta}/24 incompatible with parity sign"),
            ));
        }
    }
    if pv.is_super {
        for t in &pv.entries[2] {
            let (Some(rh), Some(ra)) = (
                series_class(&t.holo).map_err(|m| fail(&t.left_kind, &t.right_kind, m))?,
                series_class(&t.anti).map_err(|m| fail(&t.left_kind, &t.right_kind, m))?,
            ) else {
                continue;
            };
            let delta = (rh - ra).rem_euclid(24);
            if delta != 0 {
                return Err(fail(
                    &t.left_kind,
                    &t.right_kind,
                    format!("T phase exponent {delta}/24 on an R-R term"),
                ));
            }
        }
    }
    Ok(())
}

/// Term twist realizing tau -> tau + 1 on a stored factor. The sign selects
/// the holomorphic (+1) or antiholomorphic (-1) direction.
fn twist(s: &JacobiSeries, sign: i64) -> JacobiSeries {
    JacobiSeries::from_terms_grid(
        s.trunc24(),
        s.terms()
            .map(|(&(qe, ze), c)| (qe, ze, c * &CycNum::root_of_unity((sign * qe).rem_euclid(24)))),
    )
}

/// Numeric T check by exact per-term phases, for mixed-class decompositions:
/// the vector at tau + 1 must equal the phase-twisted vector at tau. The
/// phases are exact 24th roots of unity, so this certifies the 1/24-grid
/// exponent bookkeeping; such decompositions do not close under the plain
/// sector permutation. Points sit high in the upper half plane so tails are
/// negligible.
fn t_phase_residual(pv: &PartitionVector) -> Result<f64, BulkError> {
    let taus = [
        Complex64::new(0.0, 2.0),
        Complex64::new(-0.35, 1.9),
        Complex64::new(0.25, 2.05),
    ];
    let tol_each = 1e-13;
    let mut worst = 0.0f64;
    let dims = if pv.is_super { 4 } else { 1 };
    for i in 0..dims {
        let twisted: Vec<(JacobiSeries, JacobiSeries)> = pv.entries[i]
            .iter()
            .map(|t| (twist(&t.holo, 1), twist(&t.anti, -1)))
            .collect();
        for tau in taus {
            let p = EvalPoint::tau_only(tau);
            let p_next = EvalPoint::tau_only(tau + 1.0);
            let mut phased = Complex64::new(0.0, 0.0);
            for (h, a) in &twisted {
                phased += eval_pair(h, a, &p, tol_each)?.0;
            }
            let (direct, _) = eval_entry(&pv.entries[i], &p_next, tol_each)?;
            let resid = (phased - direct).norm() / direct.norm().max(1.0);
            worst = worst.max(resid);
        }
    }
    Ok(worst)
}

/// Runs the modular checks of a decomposition and reports residuals.
///
/// Non-quasi decompositions get an exact T check and a numeric S check at
/// the given points; quasi ones get the phased numeric T check instead,
/// since their vector closes under T only up to fractional phases and under
/// S only over a finite-index subgroup.
pub fn modular_check(
    b: &BulkDecomposition,
    points: &[EvalPoint],
    tol: f64,
) -> Result<Vec<CheckReport>, BulkError> {
    let base = base_trunc(b);
    let mut reports = Vec::new();
    if b.quasi {
        let resid = with_escalation(b, base, t_phase_residual)?;
        reports.push(CheckReport::from_residual(
            &b.example,
            "modular-T-phase",
            resid,
            1e-10,
        ));
    } else {
        let pv = assemble_cached(b, base)?;
        reports.push(match t_symbolic(&pv) {
            Ok(()) => CheckReport::pass(&b.example, "modular-T"),
            Err(at) => CheckReport::fail(&b.example, "modular-T", 1.0, at),
        });
        let resid = with_escalation(b, base, |pv| s_residual(pv, points, tol))?;
        reports.push(CheckReport::from_residual(&b.example, "modular-S", resid, tol));
    }
    Ok(reports)
}

// ---------------------------------------------------------------------------
// Positivity and the parity-flip control.
// ---------------------------------------------------------------------------

/// Families whose unsigned NS-NS trace is manifestly a sum of squared
/// magnitudes, hence real and positive.
pub const DIAGONAL_FAMILIES: [&str; 5] = ["diagD", "diagA1", "diagVL", "diagF", "torusD"];

/// Evaluates the unsigned NS-NS trace at 5 pseudo-random points and checks
/// real positivity. Only meaningful for diagonal decompositions.
pub fn positivity_check(b: &BulkDecomposition) -> Result<CheckReport, BulkError> {
    if !DIAGONAL_FAMILIES.contains(&b.family.as_str()) {
        return Err(BulkError::UnknownExample(format!(
            "positivity needs a diagonal family, got {}",
            b.family
        )));
    }
    let pv = assemble_cached(b, 480)?;
    let mut state: u64 = 1;
    let mut unit = move || {
        state = (1103515245u64.wrapping_mul(state) + 12345) % (1 << 31);
        state as f64 / (1u64 << 31) as f64
    };
    for _ in 0..5 {
        let re = -0.4 + 0.8 * unit();
        let im = 0.6 + 0.6 * unit();
        let p = EvalPoint::tau_only(Complex64::new(re, im));
        let (v, _) = eval_entry(&pv.entries[0], &p, 1e-7)?;
        let imag_ok = v.im.abs() <= 1e-7 * v.re.abs().max(1.0);
        if !(imag_ok && v.re > 0.0) {
            return Ok(CheckReport::fail(
                &b.example,
                "positivity",
                v.im.abs().max(if v.re > 0.0 { 0.0 } else { v.re.abs() }),
                format!("value {v} at tau = {re} + {im}i"),
            ));
        }
    }
    Ok(CheckReport::pass(&b.example, "positivity"))
}

/// Negative control: flipping the sign of one signed NS-NS group must break
/// the S identity at tau = i. Returns the resulting residual, which a
/// correct pipeline sees as large.
pub fn parity_flip_residual(b: &BulkDecomposition) -> Result<f64, BulkError> {
    if !b.is_super || b.quasi {
        return Err(BulkError::UnknownExample(
            "parity flip control needs a non-quasi super decomposition".into(),
        ));
    }
    let mut pv = assemble_cached(b, base_trunc(b))?;
    let first = &mut pv.entries[1][0];
    first.holo = first.holo.neg();
    let p = [EvalPoint::tau_only(Complex64::new(0.0, 1.0))];
    s_residual(&pv, &p, 1e-6)
}

// ---------------------------------------------------------------------------
// Grade congruence report.
// ---------------------------------------------------------------------------

/// One grouped row of the congruence report.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisRow {
    pub sector: String,
    pub left: String,
    pub right: String,
    pub count: i64,
    /// Congruence class of the left-right grade difference mod 1.
    pub grade_offset: String,
    /// Parity of the states in the group: "+1", "-1", or "mixed".
    pub parity: String,
    pub ok: bool,
}

/// Result of the congruence and S-reality test.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub example: String,
    pub strategy: String,
    pub failures: usize,
    pub lattice_s_real: bool,
    /// "potential" when all congruences hold and the S-matrix is real.
    pub verdict: String,
    pub rows: Vec<HypothesisRow>,
}

fn frac(x: &Rat) -> Rat {
    x - x.floor()
}

fn is_ternary(b: &BulkDecomposition) -> bool {
    b.summands.iter().any(|s| {
        matches!(
            s.left.kind,
            SideKind::TernaryNS { .. } | SideKind::TernaryR { .. }
        )
    })
}

/// Checks, group by group, that left-right grade differences land in the
/// classes a local theory requires: 0 mod 1 on parity-even NS-NS states,
/// 1/2 on parity-odd ones, 0 on all R-R states. Also reports reality of the
/// right-factor S-matrix; both together make a potential bulk theory.
pub fn hypothesis_check(b: &BulkDecomposition) -> Result<HypothesisReport, BulkError> {
    let st = st_data(b)?;
    let ternary = is_ternary(b);
    let mut rows = Vec::new();
    let one = CycNum::one();
    let minus_one = CycNum::from_rational(rat_int(-1));
    for sector in [Sector::NsNs, Sector::RR] {
        for ((lk, rk), (count, idx)) in grouped(b, sector) {
            let s = &b.summands[idx];
            let row = if ternary {
                // Digit strings; grades vary within a group by 1/2 (NS) or
                // 1 (R), so classes are read off from digit arithmetic.
                let (ld, rd) = match (&lk, &rk) {
                    (SideKind::TernaryNS { digits: l }, SideKind::TernaryNS { digits: r })
                    | (SideKind::TernaryR { digits: l }, SideKind::TernaryR { digits: r }) => (l, r),
                    _ => unreachable!("ternary groups pair like kinds"),
                };
                if sector == Sector::NsNs {
                    let sq = |d: &[u8]| d.iter().map(|&t| (t as i64) * (t as i64)).sum::<i64>();
                    let sigma = frac(&rat(sq(ld) - sq(rd), 6));
                    let ok = sigma.is_zero() || sigma == rat(1, 2);
                    HypothesisRow {
                        sector: sector.to_string(),
                        left: kind_label(&lk),
                        right: kind_label(&rk),
                        count,
                        grade_offset: format!("{sigma} or {sigma}+1/2"),
                        parity: "mixed".into(),
                        ok,
                    }
                } else {
                    let odd = |d: &[u8]| {
                        d.iter()
                            .map(|&t| {
                                let m = 2 * t as i64 + 1;
                                m * m
                            })
                            .sum::<i64>()
                    };
                    let delta = frac(&rat(odd(ld) - odd(rd), 24));
                    HypothesisRow {
                        sector: sector.to_string(),
                        left: kind_label(&lk),
                        right: kind_label(&rk),
                        count,
                        grade_offset: format!("{delta}"),
                        parity: "mixed".into(),
                        ok: delta.is_zero(),
                    }
                }
            } else {
                // Even side lattices and constant parity per summand: one
                // exact class from the shift norms, one sign from the
                // parity character.
                let half = (dot(&s.left.shift, &s.left.shift)
                    - dot(&s.right.shift, &s.right.shift))
                    / rat_int(2);
                let delta = frac(&half);
                let rho = Q64::one();
                let eps = &s.left.minus_char.value(&s.left.shift, &rho)
                    * &s.right.minus_char.value(&s.right.shift, &rho);
                let parity = if eps == one {
                    "+1"
                } else if eps == minus_one {
                    "-1"
                } else {
                    "mixed"
                };
                let ok = match sector {
                    Sector::RR => delta.is_zero(),
                    _ => {
                        (eps == one && delta.is_zero())
                            || (eps == minus_one && delta == rat(1, 2))
                    }
                };
                HypothesisRow {
                    sector: sector.to_string(),
                    left: kind_label(&lk),
                    right: kind_label(&rk),
                    count,
                    grade_offset: format!("{delta}"),
                    parity: parity.into(),
                    ok,
                }
            };
            rows.push(row);
        }
        if !b.is_super {
            break;
        }
    }
    let failures = rows.iter().filter(|r| !r.ok).count();
    let verdict = if failures == 0 && st.lattice_s_real {
        "potential"
    } else {
        "quasi"
    };
    Ok(HypothesisReport {
        example: b.example.clone(),
        strategy: if ternary { "ternary-digits" } else { "shift-norms" }.into(),
        failures,
        lattice_s_real: st.lattice_s_real,
        verdict: verdict.into(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::build_bulk;

    #[test]
    fn bold_matrices_satisfy_relations() {
        assert!(bold_relations_hold());
    }

    #[test]
    fn diag_d1_assembly_shape_and_t() {
        let b = build_bulk("diagD", 1).unwrap();
        let pv = assemble_cached(&b, 96).unwrap();
        assert_eq!(pv.entries[0].len(), 4);
        assert!(pv.entries[1].is_empty());
        assert!(!pv.is_super);
        // Vacuum group leads with q^(-2/24).
        let vac = pv
            .entries[0]
            .iter()
            .map(|t| t.holo.low24().unwrap())
            .min()
            .unwrap();
        assert_eq!(vac, -2);
        assert!(t_symbolic(&pv).is_ok());
    }

    #[test]
    fn diag_a1_grouping_folds_binomially() {
        let b = build_bulk("diagA1", 2).unwrap();
        let pv = assemble_cached(&b, 96).unwrap();
        let mut counts: Vec<i64> = pv.entries[0].iter().map(|t| t.count).collect();
        counts.sort_unstable();
        assert_eq!(counts, vec![1, 1, 4, 4, 6]);
    }

    #[test]
    fn lattice_smatrix_unitary_and_reality() {
        let b = build_bulk("diagD", 1).unwrap();
        let st = st_data(&b).unwrap();
        assert!(lattice_s_unitary(&st.lattice_s));
        assert!(st.lattice_s_real);
        let g = build_bulk("golayD12", 6).unwrap();
        let stg = st_data(&g).unwrap();
        assert!(lattice_s_unitary(&stg.lattice_s));
        assert!(!stg.lattice_s_real);
    }

    #[test]
    fn diag_f1_modular_and_flip_control() {
        let b = build_bulk("diagF", 1).unwrap();
        let reports = modular_check(&b, &default_points(), 1e-6).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert!(r.pass, "{}: residual {} at {:?}", r.check, r.residual, r.first_mismatch);
        }
        let flipped = parity_flip_residual(&b).unwrap();
        assert!(flipped > 0.1, "flip residual {flipped}");
    }

    #[test]
    fn diag_f1_positivity_and_reality_of_trace() {
        let b = build_bulk("diagF", 1).unwrap();
        let rep = positivity_check(&b).unwrap();
        assert!(rep.pass, "{:?}", rep.first_mismatch);
        let pv = assemble_cached(&b, 480).unwrap();
        let p = EvalPoint::tau_only(Complex64::new(0.3, 0.9));
        for entry in &pv.entries {
            let (v, _) = eval_entry(entry, &p, 1e-9).unwrap();
            assert!(v.im.abs() < 1e-9 * v.norm().max(1.0), "entry value {v}");
        }
    }

    #[test]
    fn hypothesis_verdicts() {
        let f2 = hypothesis_check(&build_bulk("diagF", 2).unwrap()).unwrap();
        assert_eq!(f2.verdict, "potential");
        assert_eq!(f2.failures, 0);
        let d3 = hypothesis_check(&build_bulk("diagD", 3).unwrap()).unwrap();
        assert_eq!(d3.verdict, "potential");
        assert!(d3.rows.iter().all(|r| r.grade_offset == "0" && r.parity == "+1"));
        let tet = hypothesis_check(&build_bulk("tetrahedralK3", 3).unwrap()).unwrap();
        assert_eq!(tet.failures, 0);
        let g = hypothesis_check(&build_bulk("golayD12", 6).unwrap()).unwrap();
        assert_eq!(g.verdict, "quasi");
        assert!(g.failures > 0);
        assert!(!g.lattice_s_real);
    }
}
