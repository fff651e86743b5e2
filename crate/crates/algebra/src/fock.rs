//! A truncated Fock space for six free fermion pairs of weight 1/2, used
//! to test operator relations concretely.
//!
//! The species are b_1..b_6 (indices 0..5) and c_1..c_6 (indices 6..11),
//! with contractions b_i(z) c_j(w) ~ d_ij / (z - w). Modes are half-odd
//! integers; a basis state is a set of creation slots (species, depth)
//! with depth r in {1/2, 3/2, ...} and total level at most the cutoff.
//! States are bit masks over slots, ordered as ascending products of
//! creation operators, so a mode acting on a state picks up the parity
//! of the occupied slots below its target.
//!
//! Composite fields come from normal ordering. For fields A, B of weight
//! d_A, d_B:
//!
//!   (:AB:)_n = sum_(k <= -d_A) A_k B_(n-k)
//!              + (-1)^(|A||B|) sum_(k > -d_A) B_(n-k) A_k
//!
//! and (dA)_n = -(n + d_A) A_n. Normal ordering puts annihilators first,
//! so a composite mode never passes through states above the cutoff and
//! the truncation is exact on the whole space. Products of composites do
//! overflow, which is why relation checks restrict to states whose level
//! leaves enough headroom.
//!
//! The relation sets:
//!
//! | set         | content                                              |
//! |-------------|------------------------------------------------------|
//! | sl2-level-1 | Clifford pairs, h/e/f brackets at level 1, L_0 grading |
//! | n4-c6       | Virasoro with c = 6, supercurrent covariance, {G, G} |
//!
//! The {G, G} cross brackets with three contractions do not close onto
//! the N=4 targets: the realized current is b_1 c_1 + b_3 c_3 + b_5 c_5
//! plus quartic corrections rather than the sl(2) current h. Those checks
//! fail, the report says so, and `calibration_search` shows that no
//! rescaling of the four supercurrents can repair proportionality.

use crate::n4::{
    basis_bracket, bracket_expr, primed_bracket, AlgebraError, Gen, ModeExpr, PrimedGen,
};
use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::HashMap;
use vosa_core::cyclotomic::{rat, CycNum};

/// Species index for a fermion: kind 'b' or 'c', label 1..=6.
pub fn species_index(kind: char, label: usize) -> usize {
    assert!((1..=6).contains(&label));
    match kind {
        'b' => label - 1,
        'c' => label + 5,
        _ => panic!("fermion kind must be 'b' or 'c'"),
    }
}

/// The species contracted by a positive mode of the given species.
pub fn partner(species: usize) -> usize {
    (species + 6) % 12
}

/// Basis of monomial states of total level at most the cutoff.
#[derive(Debug)]
pub struct FockSpace {
    two_cutoff: i64,
    depths: usize,
    states: Vec<u64>,
    index: HashMap<u64, usize>,
    two_levels: Vec<i64>,
}

const SPECIES: usize = 12;
const DIM_GUARD: u64 = 1_000_000;

impl FockSpace {
    /// Builds the basis for half-odd modes up to depth cutoff/2 in level.
    /// The cutoff is passed doubled and must be a positive odd integer.
    pub fn new(two_cutoff: i64) -> Result<Self, AlgebraError> {
        assert!(two_cutoff >= 1 && two_cutoff % 2 == 1);
        let depths = ((two_cutoff + 1) / 2) as usize;
        if SPECIES * depths > 60 {
            return Err(AlgebraError::CutoffTooLarge);
        }
        // Count states first with a level DP over the slots.
        let mut counts = vec![0u64; (two_cutoff + 1) as usize];
        counts[0] = 1;
        for _species in 0..SPECIES {
            for d in 0..depths {
                let w = (2 * d + 1) as usize;
                for lvl in (0..counts.len()).rev() {
                    if lvl + w < counts.len() {
                        counts[lvl + w] = counts[lvl + w].saturating_add(counts[lvl]);
                    }
                }
            }
        }
        let total: u64 = counts.iter().sum();
        if total > DIM_GUARD {
            return Err(AlgebraError::CutoffTooLarge);
        }

        let nslots = SPECIES * depths;
        let mut states = Vec::with_capacity(total as usize);
        let mut stack: Vec<(usize, u64, i64)> = vec![(0, 0, 0)];
        while let Some((slot, mask, lvl)) = stack.pop() {
            if slot == nslots {
                states.push(mask);
                continue;
            }
            let w = 2 * (slot % depths) as i64 + 1;
            if lvl + w <= two_cutoff {
                stack.push((slot + 1, mask | (1u64 << slot), lvl + w));
            }
            stack.push((slot + 1, mask, lvl));
        }
        states.sort_unstable();
        assert_eq!(states.len() as u64, total);

        let index = states.iter().enumerate().map(|(i, m)| (*m, i)).collect();
        let two_levels = states
            .iter()
            .map(|m| {
                let mut lvl = 0i64;
                let mut rest = *m;
                while rest != 0 {
                    let slot = rest.trailing_zeros() as usize;
                    lvl += 2 * (slot % depths) as i64 + 1;
                    rest &= rest - 1;
                }
                lvl
            })
            .collect();
        Ok(FockSpace {
            two_cutoff,
            depths,
            states,
            index,
            two_levels,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn two_cutoff(&self) -> i64 {
        self.two_cutoff
    }

    pub fn vacuum(&self) -> usize {
        self.index[&0u64]
    }

    pub fn state_mask(&self, j: usize) -> u64 {
        self.states[j]
    }

    pub fn two_level(&self, j: usize) -> i64 {
        self.two_levels[j]
    }

    pub fn index_of(&self, mask: u64) -> Option<usize> {
        self.index.get(&mask).copied()
    }

    fn max_two_mode(&self) -> i64 {
        2 * self.depths as i64 - 1
    }

    /// The single fermion mode X_(species, n) with two_n = 2n odd.
    /// Negative modes create the slot (species, |n|); positive modes
    /// contract the partner species slot at depth n.
    pub fn mode(&self, species: usize, two_n: i64) -> SparseOp {
        assert!(species < SPECIES);
        assert!(two_n.rem_euclid(2) == 1);
        let mut op = SparseOp::zero(self.dim());
        let depth = ((two_n.abs() - 1) / 2) as usize;
        if depth >= self.depths {
            return op;
        }
        let slot = if two_n < 0 {
            species * self.depths + depth
        } else {
            partner(species) * self.depths + depth
        };
        let bit = 1u64 << slot;
        let below = bit - 1;
        for (j, &mask) in self.states.iter().enumerate() {
            let new_mask = if two_n < 0 {
                if mask & bit != 0 {
                    continue;
                }
                mask | bit
            } else {
                if mask & bit == 0 {
                    continue;
                }
                mask & !bit
            };
            if let Some(i) = self.index_of(new_mask) {
                let sign = if (mask & below).count_ones() % 2 == 0 {
                    1
                } else {
                    -1
                };
                op.cols[j].push((i as u32, Rational64::from_integer(sign)));
            }
        }
        op
    }

    /// Applies the listed creation modes, left factor outermost, to the
    /// vacuum. Returns the resulting basis index and sign.
    pub fn basis_state(&self, creations: &[(usize, i64)]) -> Option<(usize, Rational64)> {
        let mut j = self.vacuum();
        let mut coeff = Rational64::from_integer(1);
        for &(species, two_n) in creations.iter().rev() {
            let op = self.mode(species, two_n);
            let col = op.col(j);
            match col {
                [(row, v)] => {
                    j = *row as usize;
                    coeff *= *v;
                }
                _ => return None,
            }
        }
        Some((j, coeff))
    }

    fn quad_mode(&self, a: Factor, b: Factor, m: i64) -> SparseOp {
        let max = self.max_two_mode();
        let two_da = 1 + 2 * i64::from(a.deriv);
        let mut out = SparseOp::zero(self.dim());
        let mut two_k = -max;
        while two_k <= max {
            let two_other = 2 * m - two_k;
            if two_other.abs() <= max {
                let ca = a.coeff(two_k);
                let cb = b.coeff(two_other);
                let scale = ca * cb;
                if !scale.is_zero() {
                    let op_a = self.mode(a.species, two_k);
                    let op_b = self.mode(b.species, two_other);
                    let term = if two_k <= -two_da {
                        op_a.compose(&op_b)
                    } else {
                        // Both factors are odd: the reordered sum enters
                        // with a minus sign.
                        op_b.compose(&op_a).scale(Rational64::from_integer(-1))
                    };
                    out = out.add(&term.scale(scale));
                }
            }
            two_k += 2;
        }
        out
    }

    fn cubic_mode(&self, a: usize, b: usize, c: usize, two_r: i64) -> SparseOp {
        let max = self.max_two_mode();
        // Cache the inner quadratic (:BC:)_m for every reachable mode.
        let mut inner: HashMap<i64, SparseOp> = HashMap::new();
        let mut out = SparseOp::zero(self.dim());
        let mut two_k = -max;
        while two_k <= max {
            let m = (two_r - two_k) / 2;
            if m.abs() <= max {
                let bc = inner
                    .entry(m)
                    .or_insert_with(|| self.quad_mode(Factor::plain(b), Factor::plain(c), m))
                    .clone();
                let op_a = self.mode(a, two_k);
                // A is odd and :BC: is even, so no reordering sign.
                let term = if two_k <= -1 {
                    op_a.compose(&bc)
                } else {
                    bc.compose(&op_a)
                };
                out = out.add(&term);
            }
            two_k += 2;
        }
        out
    }

    /// Modes of the named composite fields:
    ///
    ///   h = :b1 c1: + :b2 c2:   e = :b1 b2:   f = :c2 c1:
    ///   T = 1/2 sum_i (:(db_i) c_i: + :(dc_i) b_i:)
    ///   G+1 = :b1 b3 b5:  G-1 = :c2 b3 b5:  G-2 = :c1 c3 c5:  G+2 = :b2 c3 c5:
    ///
    /// Integer-moded fields take even `two_n`, supercurrents odd.
    pub fn composite_mode(&self, field: &str, two_n: i64) -> Result<SparseOp, AlgebraError> {
        let even = |op: Result<SparseOp, AlgebraError>| {
            if two_n % 2 != 0 {
                Err(AlgebraError::UnsupportedMode)
            } else {
                op
            }
        };
        let odd = |op: Result<SparseOp, AlgebraError>| {
            if two_n.rem_euclid(2) != 1 {
                Err(AlgebraError::UnsupportedMode)
            } else {
                op
            }
        };
        let m = two_n / 2;
        let b = |i: usize| species_index('b', i);
        let c = |i: usize| species_index('c', i);
        match field {
            "h" => even(Ok(self
                .quad_mode(Factor::plain(b(1)), Factor::plain(c(1)), m)
                .add(&self.quad_mode(Factor::plain(b(2)), Factor::plain(c(2)), m)))),
            "e" => even(Ok(self.quad_mode(Factor::plain(b(1)), Factor::plain(b(2)), m))),
            "f" => even(Ok(self.quad_mode(Factor::plain(c(2)), Factor::plain(c(1)), m))),
            "T" => even(Ok({
                let mut acc = SparseOp::zero(self.dim());
                for i in 1..=6 {
                    acc = acc
                        .add(&self.quad_mode(Factor::deriv(b(i)), Factor::plain(c(i)), m))
                        .add(&self.quad_mode(Factor::deriv(c(i)), Factor::plain(b(i)), m));
                }
                acc.scale(Rational64::new(1, 2))
            })),
            "G+1" => odd(Ok(self.cubic_mode(b(1), b(3), b(5), two_n))),
            "G-1" => odd(Ok(self.cubic_mode(c(2), b(3), b(5), two_n))),
            "G-2" => odd(Ok(self.cubic_mode(c(1), c(3), c(5), two_n))),
            "G+2" => odd(Ok(self.cubic_mode(b(2), c(3), c(5), two_n))),
            _ => Err(AlgebraError::UnsupportedField),
        }
    }
}

/// A weight-1/2 field or its derivative, as a factor in a composite.
#[derive(Clone, Copy)]
struct Factor {
    species: usize,
    deriv: bool,
}

impl Factor {
    fn plain(species: usize) -> Self {
        Factor {
            species,
            deriv: false,
        }
    }

    fn deriv(species: usize) -> Self {
        Factor {
            species,
            deriv: true,
        }
    }

    fn coeff(&self, two_k: i64) -> Rational64 {
        if self.deriv {
            // (dA)_k = -(k + 1/2) A_k.
            Rational64::new(-(two_k + 1), 2)
        } else {
            Rational64::from_integer(1)
        }
    }
}

/// Sparse linear operator stored by columns, rows sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseOp {
    pub dim: usize,
    cols: Vec<Vec<(u32, Rational64)>>,
}

fn normalize_col(v: &mut Vec<(u32, Rational64)>) {
    v.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(u32, Rational64)> = Vec::with_capacity(v.len());
    for &(row, val) in v.iter() {
        match out.last_mut() {
            Some(last) if last.0 == row => last.1 += val,
            _ => out.push((row, val)),
        }
    }
    out.retain(|e| !e.1.is_zero());
    *v = out;
}

impl SparseOp {
    pub fn zero(dim: usize) -> Self {
        SparseOp {
            dim,
            cols: vec![Vec::new(); dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        SparseOp {
            dim,
            cols: (0..dim)
                .map(|j| vec![(j as u32, Rational64::from_integer(1))])
                .collect(),
        }
    }

    pub fn col(&self, j: usize) -> &[(u32, Rational64)] {
        &self.cols[j]
    }

    pub fn is_zero(&self) -> bool {
        self.cols.iter().all(|c| c.is_empty())
    }

    pub fn add(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.dim, other.dim);
        let mut out = self.clone();
        for j in 0..self.dim {
            out.cols[j].extend_from_slice(&other.cols[j]);
            normalize_col(&mut out.cols[j]);
        }
        out
    }

    pub fn sub(&self, other: &SparseOp) -> SparseOp {
        self.add(&other.scale(Rational64::from_integer(-1)))
    }

    pub fn scale(&self, s: Rational64) -> SparseOp {
        if s.is_zero() {
            return SparseOp::zero(self.dim);
        }
        SparseOp {
            dim: self.dim,
            cols: self
                .cols
                .iter()
                .map(|c| c.iter().map(|(r, v)| (*r, v * s)).collect())
                .collect(),
        }
    }

    /// self applied after other.
    pub fn compose(&self, other: &SparseOp) -> SparseOp {
        assert_eq!(self.dim, other.dim);
        let mut out = SparseOp::zero(self.dim);
        for j in 0..self.dim {
            let mut acc: Vec<(u32, Rational64)> = Vec::new();
            for &(mid, v) in &other.cols[j] {
                for &(row, w) in &self.cols[mid as usize] {
                    acc.push((row, v * w));
                }
            }
            normalize_col(&mut acc);
            out.cols[j] = acc;
        }
        out
    }

    pub fn commutator(&self, other: &SparseOp) -> SparseOp {
        self.compose(other).sub(&other.compose(self))
    }

    pub fn anticommutator(&self, other: &SparseOp) -> SparseOp {
        self.compose(other).add(&other.compose(self))
    }

    /// Columns equal on every state with two_level + margin <= cutoff.
    pub fn eq_on_safe(&self, other: &SparseOp, space: &FockSpace, margin_two: i64) -> bool {
        self.first_mismatch(other, space, margin_two).is_none()
    }

    pub fn first_mismatch(
        &self,
        other: &SparseOp,
        space: &FockSpace,
        margin_two: i64,
    ) -> Option<usize> {
        (0..self.dim).find(|&j| {
            space.two_level(j) + margin_two <= space.two_cutoff()
                && self.cols[j] != other.cols[j]
        })
    }
}

/// One named relation with its outcome.
#[derive(Debug, Clone)]
pub struct RelationCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of a relation set sweep.
#[derive(Debug, Clone)]
pub struct RelationReport {
    pub set: String,
    pub relations: Vec<RelationCheck>,
}

impl RelationReport {
    pub fn all_pass(&self) -> bool {
        self.relations.iter().all(|r| r.pass)
    }
}

/// Cache of composite modes keyed by (field, doubled mode).
struct OpCache<'a> {
    space: &'a FockSpace,
    ops: HashMap<(&'static str, i64), SparseOp>,
}

impl<'a> OpCache<'a> {
    fn new(space: &'a FockSpace) -> Self {
        OpCache {
            space,
            ops: HashMap::new(),
        }
    }

    fn get(&mut self, field: &'static str, two_n: i64) -> SparseOp {
        let space = self.space;
        self.ops
            .entry((field, two_n))
            .or_insert_with(|| space.composite_mode(field, two_n).expect("known composite"))
            .clone()
    }
}

fn cyc_to_q64(v: &CycNum) -> Option<Rational64> {
    let r = v.as_rational()?;
    Some(Rational64::new(r.numer().to_i64()?, r.denom().to_i64()?))
}

/// Realizes a symbolic mode expression as an operator, sending L to T
/// modes, the diagonalized currents to h, e, f, and the supercurrents to
/// their free-field composites.
fn realize(cache: &mut OpCache, expr: &ModeExpr) -> Result<SparseOp, AlgebraError> {
    let c_val = CycNum::from_integer(6);
    let k_val = CycNum::one();
    let i_half = CycNum::i().scale(&rat(1, 2));
    let half = CycNum::from_rational(rat(1, 2));

    let mut weights: HashMap<(&'static str, i64), CycNum> = HashMap::new();
    let mut id_weight = CycNum::zero();
    let bump = |map: &mut HashMap<(&'static str, i64), CycNum>,
                    key: (&'static str, i64),
                    v: CycNum| {
        let slot = map.entry(key).or_insert_with(CycNum::zero);
        *slot = &*slot + &v;
    };

    for (gen, poly) in expr.terms() {
        let v = poly.eval(&c_val, &k_val);
        if v.is_zero() {
            continue;
        }
        match *gen {
            Gen::One => id_weight = &id_weight + &v,
            Gen::L { two_m } => bump(&mut weights, ("T", two_m), v),
            Gen::J { i: 1, two_m } => {
                // J^1 = (i/2) J with J realized by h.
                bump(&mut weights, ("h", two_m), &v * &i_half);
            }
            Gen::J { i: 2, two_m } => {
                // J^2 = (J^+ - J^-)/2 realized by (e - f)/2.
                bump(&mut weights, ("e", two_m), &v * &half);
                bump(&mut weights, ("f", two_m), -&(&v * &half));
            }
            Gen::J { i: 3, two_m } => {
                // J^3 = (i/2)(J^+ + J^-) realized by (i/2)(e + f).
                bump(&mut weights, ("e", two_m), &v * &i_half);
                bump(&mut weights, ("f", two_m), &v * &i_half);
            }
            Gen::G { a: 0, two_r } => {
                // G^0 = (G^(-,1) + G^(+,2))/2.
                bump(&mut weights, ("G-1", two_r), &v * &half);
                bump(&mut weights, ("G+2", two_r), &v * &half);
            }
            Gen::G { a: 1, two_r } => {
                // G^1 = -(i/2)(G^(+,2) - G^(-,1)).
                bump(&mut weights, ("G+2", two_r), -&(&v * &i_half));
                bump(&mut weights, ("G-1", two_r), &v * &i_half);
            }
            Gen::G { a: 2, two_r } => {
                // G^2 = (G^(-,2) - G^(+,1))/2.
                bump(&mut weights, ("G-2", two_r), &v * &half);
                bump(&mut weights, ("G+1", two_r), -&(&v * &half));
            }
            Gen::G { a: 3, two_r } => {
                // G^3 = -(i/2)(G^(-,2) + G^(+,1)).
                bump(&mut weights, ("G-2", two_r), -&(&v * &i_half));
                bump(&mut weights, ("G+1", two_r), -&(&v * &i_half));
            }
            _ => return Err(AlgebraError::UnsupportedMode),
        }
    }

    let dim = cache.space.dim();
    let mut out = SparseOp::zero(dim);
    for ((field, two_n), w) in weights {
        if w.is_zero() {
            continue;
        }
        let q = cyc_to_q64(&w).ok_or(AlgebraError::UnsupportedMode)?;
        out = out.add(&cache.get(field, two_n).scale(q));
    }
    if !id_weight.is_zero() {
        let q = cyc_to_q64(&id_weight).ok_or(AlgebraError::UnsupportedMode)?;
        out = out.add(&SparseOp::identity(dim).scale(q));
    }
    Ok(out)
}

fn check(
    space: &FockSpace,
    name: String,
    lhs: &SparseOp,
    rhs: &SparseOp,
    margin_two: i64,
) -> RelationCheck {
    let states = (0..space.dim())
        .filter(|&j| space.two_level(j) + margin_two <= space.two_cutoff())
        .count();
    match lhs.first_mismatch(rhs, space, margin_two) {
        None => RelationCheck {
            name,
            pass: true,
            detail: format!("{} states compared", states),
        },
        Some(j) => RelationCheck {
            name,
            pass: false,
            detail: format!(
                "first mismatch on state mask {:#x} at level {}/2",
                space.state_mask(j),
                space.two_level(j)
            ),
        },
    }
}

const PRIMED_GS: [(i8, u8, &str); 4] = [
    (1, 1, "G+1"),
    (-1, 1, "G-1"),
    (1, 2, "G+2"),
    (-1, 2, "G-2"),
];

fn sl2_relations(space: &FockSpace) -> Vec<RelationCheck> {
    let mut cache = OpCache::new(space);
    let dim = space.dim();
    let id = SparseOp::identity(dim);
    let mut out = Vec::new();

    // Clifford pairs: {X_(p,r), X_(q,s)} = d delta on every mode pair at
    // depth 1/2.
    let mut clifford_ok = true;
    let mut clifford_detail = String::new();
    for p in 0..SPECIES {
        for q in 0..SPECIES {
            for two_r in [-1i64, 1] {
                for two_s in [-1i64, 1] {
                    let lhs = space.mode(p, two_r).anticommutator(&space.mode(q, two_s));
                    // The annihilator in the pair contracts the other's
                    // slot exactly when the species are partners.
                    let expect = if two_r + two_s == 0 && partner(p) == q {
                        id.clone()
                    } else {
                        SparseOp::zero(dim)
                    };
                    let margin = (-two_r).max(0) + (-two_s).max(0);
                    if !lhs.eq_on_safe(&expect, space, margin) {
                        clifford_ok = false;
                        clifford_detail = format!("pair ({}, {}) modes ({}, {})/2", p, q, two_r, two_s);
                    }
                }
            }
        }
    }
    out.push(RelationCheck {
        name: "clifford pairs at depth 1/2".into(),
        pass: clifford_ok,
        detail: if clifford_ok {
            "576 mode pairs".into()
        } else {
            clifford_detail
        },
    });

    // h_0 eigenvalue on a charged state.
    let h0 = cache.get("h", 0);
    let (jb, _) = space
        .basis_state(&[(species_index('b', 1), -1)])
        .expect("b1 state");
    let pass = h0.col(jb) == [(jb as u32, Rational64::from_integer(1))];
    out.push(RelationCheck {
        name: "h_0 eigenvalue 1 on b1 state".into(),
        pass,
        detail: format!("{:?}", h0.col(jb)),
    });

    // e_0 maps the c2 state onto the b1 state.
    let e0 = cache.get("e", 0);
    let (jc, _) = space
        .basis_state(&[(species_index('c', 2), -1)])
        .expect("c2 state");
    let col = e0.col(jc);
    let pass = matches!(col, [(row, v)] if *row as usize == jb && v.abs() == Rational64::from_integer(1));
    out.push(RelationCheck {
        name: "e_0 maps c2 state to b1 state".into(),
        pass,
        detail: format!("{:?}", col),
    });

    let f0 = cache.get("f", 0);
    let t0 = cache.get("T", 0);

    let pairs: [(&str, SparseOp, SparseOp, i64); 4] = [
        (
            "[h_0, e_0] = 2 e_0",
            h0.commutator(&e0),
            e0.scale(Rational64::from_integer(2)),
            0,
        ),
        (
            "[h_0, f_0] = -2 f_0",
            h0.commutator(&f0),
            f0.scale(Rational64::from_integer(-2)),
            0,
        ),
        ("[e_0, f_0] = h_0", e0.commutator(&f0), h0.clone(), 0),
        ("[h_0, L_0] = 0", h0.commutator(&t0), SparseOp::zero(dim), 0),
    ];
    for (name, lhs, rhs, margin) in pairs {
        out.push(check(space, name.into(), &lhs, &rhs, margin));
    }

    // Level-1 central terms.
    let e1 = cache.get("e", 2);
    let fm1 = cache.get("f", -2);
    out.push(check(
        space,
        "[e_1, f_-1] = h_0 + 1".into(),
        &e1.commutator(&fm1),
        &h0.add(&id),
        2,
    ));
    let h1 = cache.get("h", 2);
    let hm1 = cache.get("h", -2);
    out.push(check(
        space,
        "[h_1, h_-1] = 2".into(),
        &h1.commutator(&hm1),
        &id.scale(Rational64::from_integer(2)),
        2,
    ));

    // L_0 is diagonal with eigenvalue the level.
    let mut diag_ok = true;
    for j in 0..dim {
        let expect: Vec<(u32, Rational64)> = if space.two_level(j) == 0 {
            Vec::new()
        } else {
            vec![(j as u32, Rational64::new(space.two_level(j), 2))]
        };
        if t0.col(j) != expect {
            diag_ok = false;
            break;
        }
    }
    out.push(RelationCheck {
        name: "L_0 diagonal with level eigenvalues".into(),
        pass: diag_ok,
        detail: format!("{} states", dim),
    });

    out
}

fn n4_relations(space: &FockSpace) -> Result<Vec<RelationCheck>, AlgebraError> {
    let mut cache = OpCache::new(space);
    let mut out = Vec::new();

    // Virasoro window.
    let mut ok = true;
    let mut detail = String::from("9 pairs");
    for m in -1..=1i64 {
        for n in -1..=1i64 {
            let lhs = cache.get("T", 2 * m).commutator(&cache.get("T", 2 * n));
            let rhs = realize(&mut cache, &basis_bracket(&Gen::l(m), &Gen::l(n)))?;
            let margin = (-2 * m).max(0) + (-2 * n).max(0);
            let c = check(space, String::new(), &lhs, &rhs, margin);
            if !c.pass {
                ok = false;
                detail = format!("({}, {}): {}", m, n, c.detail);
            }
        }
    }
    out.push(RelationCheck {
        name: "[L_m, L_n] for |m|, |n| <= 1".into(),
        pass: ok,
        detail,
    });

    // Extended central window.
    let lhs = cache.get("T", 4).commutator(&cache.get("T", -4));
    let rhs = realize(&mut cache, &basis_bracket(&Gen::l(2), &Gen::l(-2)))?;
    out.push(check(
        space,
        "[L_2, L_-2] = 4 L_0 + c/2 with c = 6".into(),
        &lhs,
        &rhs,
        4,
    ));

    // Supercurrent covariance under L and the diagonalized current.
    for &(sign, idx, field) in &PRIMED_GS {
        let mut ok = true;
        let mut detail = String::from("6 modes");
        for m in -1..=1i64 {
            for two_r in [-1i64, 1] {
                let g = PrimedGen::g(sign, idx, two_r);
                let lhs = cache.get("T", 2 * m).commutator(&cache.get(field, two_r));
                let rhs = realize(
                    &mut cache,
                    &bracket_expr(&ModeExpr::gen(Gen::l(m)), &g.expand()),
                )?;
                let margin = (-2 * m).max(0) + (-two_r).max(0);
                let c = check(space, String::new(), &lhs, &rhs, margin);
                if !c.pass {
                    ok = false;
                    detail = format!("m {}, r {}/2: {}", m, two_r, c.detail);
                }
            }
        }
        out.push(RelationCheck {
            name: format!("[L_m, {}_r] covariance", field),
            pass: ok,
            detail,
        });

        let mut ok = true;
        let mut detail = String::from("2 modes");
        for two_r in [-1i64, 1] {
            let g = PrimedGen::g(sign, idx, two_r);
            let lhs = cache.get("h", 0).commutator(&cache.get(field, two_r));
            let rhs = realize(&mut cache, &primed_bracket(&PrimedGen::j(0), &g))?;
            let margin = (-two_r).max(0);
            let c = check(space, String::new(), &lhs, &rhs, margin);
            if !c.pass {
                ok = false;
                detail = format!("r {}/2: {}", two_r, c.detail);
            }
        }
        out.push(RelationCheck {
            name: format!("[J_0, {}_r] charge {}", field, sign),
            pass: ok,
            detail,
        });
    }

    // Supercurrent anticommutators against the N=4 targets.
    let gg_modes = [(-1i64, 1i64), (1, -1), (1, 1)];
    let gg_pair = |cache: &mut OpCache,
                       out: &mut Vec<RelationCheck>,
                       x: (i8, u8, &'static str),
                       y: (i8, u8, &'static str),
                       modes: &[(i64, i64)],
                       label: &str|
     -> Result<(), AlgebraError> {
        let mut ok = true;
        let mut detail = format!("{} mode pairs", modes.len());
        for &(two_r, two_s) in modes {
            let gx = PrimedGen::g(x.0, x.1, two_r);
            let gy = PrimedGen::g(y.0, y.1, two_s);
            let lhs = cache
                .get(x.2, two_r)
                .anticommutator(&cache.get(y.2, two_s));
            let rhs = realize(cache, &primed_bracket(&gx, &gy))?;
            let margin = (-two_r).max(0) + (-two_s).max(0);
            let c = check(space, String::new(), &lhs, &rhs, margin);
            if !c.pass {
                ok = false;
                detail = format!("modes ({}, {})/2: {}", two_r, two_s, c.detail);
            }
        }
        out.push(RelationCheck {
            name: label.into(),
            pass: ok,
            detail,
        });
        Ok(())
    };

    for &g in &PRIMED_GS {
        gg_pair(
            &mut cache,
            &mut out,
            g,
            g,
            &gg_modes,
            &format!("{{{}, {}}} = 0", g.2, g.2),
        )?;
    }
    gg_pair(
        &mut cache,
        &mut out,
        PRIMED_GS[0],
        PRIMED_GS[1],
        &gg_modes,
        "{G+1, G-1} = 0",
    )?;
    gg_pair(
        &mut cache,
        &mut out,
        PRIMED_GS[2],
        PRIMED_GS[3],
        &gg_modes,
        "{G+2, G-2} = 0",
    )?;
    gg_pair(
        &mut cache,
        &mut out,
        PRIMED_GS[0],
        PRIMED_GS[3],
        &gg_modes,
        "{G+1, G-2} matches the N=4 target",
    )?;
    gg_pair(
        &mut cache,
        &mut out,
        PRIMED_GS[2],
        PRIMED_GS[1],
        &gg_modes,
        "{G+2, G-1} matches the N=4 target",
    )?;
    gg_pair(
        &mut cache,
        &mut out,
        PRIMED_GS[0],
        PRIMED_GS[3],
        &[(3, -3)],
        "{G+1_3/2, G-2_-3/2} extended central window",
    )?;

    Ok(out)
}

/// Sweeps a named relation set at the given doubled level cutoff.
pub fn verify_relations(two_cutoff: i64, set: &str) -> Result<RelationReport, AlgebraError> {
    let space = FockSpace::new(two_cutoff)?;
    let relations = match set {
        "sl2-level-1" => sl2_relations(&space),
        "n4-c6" => n4_relations(&space)?,
        _ => return Err(AlgebraError::UnsupportedField),
    };
    Ok(RelationReport {
        set: set.to_string(),
        relations,
    })
}

/// Proportionality data for one supercurrent pair.
#[derive(Debug, Clone)]
pub struct CalibrationReport {
    /// For each cross pair, the constant ratio realized/target if the two
    /// operators are proportional on the safe subspace.
    pub pairs: Vec<(String, Option<Rational64>)>,
    /// Whether any rescaling of the four supercurrents can make every
    /// pair match its target.
    pub consistent: bool,
}

/// Tests whether rescaled supercurrents sigma_x G_x could satisfy the
/// {G, G} targets: each realized anticommutator must at least be
/// proportional to its target. Reports the ratios or their absence.
pub fn calibration_search(two_cutoff: i64) -> Result<CalibrationReport, AlgebraError> {
    let space = FockSpace::new(two_cutoff)?;
    let mut cache = OpCache::new(&space);
    let cross: [((i8, u8, &'static str), (i8, u8, &'static str)); 2] = [
        (PRIMED_GS[0], PRIMED_GS[3]),
        (PRIMED_GS[2], PRIMED_GS[1]),
    ];
    let mut pairs = Vec::new();
    let mut consistent = true;
    for (x, y) in cross {
        for &(two_r, two_s) in &[(-1i64, 1i64), (1, -1)] {
            let lhs = cache
                .get(x.2, two_r)
                .anticommutator(&cache.get(y.2, two_s));
            let rhs = realize(
                &mut cache,
                &primed_bracket(&PrimedGen::g(x.0, x.1, two_r), &PrimedGen::g(y.0, y.1, two_s)),
            )?;
            let margin = (-two_r).max(0) + (-two_s).max(0);
            let ratio = proportionality_ratio(&lhs, &rhs, &space, margin);
            if ratio.is_none() {
                consistent = false;
            }
            pairs.push((
                format!("{{{}_{}/2, {}_{}/2}}", x.2, two_r, y.2, two_s),
                ratio,
            ));
        }
    }
    Ok(CalibrationReport { pairs, consistent })
}

fn proportionality_ratio(
    lhs: &SparseOp,
    rhs: &SparseOp,
    space: &FockSpace,
    margin_two: i64,
) -> Option<Rational64> {
    let mut ratio: Option<Rational64> = None;
    for j in 0..space.dim() {
        if space.two_level(j) + margin_two > space.two_cutoff() {
            continue;
        }
        let (a, b) = (lhs.col(j), rhs.col(j));
        if b.is_empty() {
            if !a.is_empty() {
                return None;
            }
            continue;
        }
        if a.len() != b.len() {
            return None;
        }
        for (ea, eb) in a.iter().zip(b.iter()) {
            if ea.0 != eb.0 {
                return None;
            }
            let r = ea.1 / eb.1;
            match ratio {
                None => ratio = Some(r),
                Some(prev) if prev != r => return None,
                _ => {}
            }
        }
    }
    ratio
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_match_counting_oracle() {
        assert_eq!(FockSpace::new(1).unwrap().dim(), 13);
        assert_eq!(FockSpace::new(7).unwrap().dim(), 14648);

        // Independent oracle: count subsets of slots by brute force at a
        // small cutoff (24 slots at cutoff 3/2 fit in one pass).
        let space = FockSpace::new(3).unwrap();
        let depths = 2usize;
        let mut count = 0usize;
        for mask in 0u64..(1 << (12 * depths)) {
            let mut lvl = 0i64;
            let mut rest = mask;
            while rest != 0 {
                let slot = rest.trailing_zeros() as usize;
                lvl += 2 * (slot % depths) as i64 + 1;
                rest &= rest - 1;
            }
            if lvl <= 3 {
                count += 1;
            }
        }
        assert_eq!(space.dim(), count);
    }

    #[test]
    fn oversized_cutoffs_are_rejected() {
        let err = FockSpace::new(21).unwrap_err();
        assert_eq!(err.to_string(), "cutoff too large");
    }

    #[test]
    fn creation_order_signs_anticommute() {
        let space = FockSpace::new(3).unwrap();
        let b1 = species_index('b', 1);
        let b2 = species_index('b', 2);
        let (j1, s1) = space.basis_state(&[(b1, -1), (b2, -1)]).unwrap();
        let (j2, s2) = space.basis_state(&[(b2, -1), (b1, -1)]).unwrap();
        assert_eq!(j1, j2);
        assert_eq!(s1, -s2);
    }

    #[test]
    fn unknown_composites_are_rejected() {
        let space = FockSpace::new(1).unwrap();
        let err = space.composite_mode("phi", 0).unwrap_err();
        assert_eq!(err.to_string(), "unsupported field");
        let err = space.composite_mode("h", 1).unwrap_err();
        assert_eq!(err.to_string(), "unsupported mode");
    }

    #[test]
    fn sl2_level_one_relations_hold() {
        let report = verify_relations(5, "sl2-level-1").unwrap();
        for r in &report.relations {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn n4_cross_brackets_fail_as_analyzed() {
        let report = verify_relations(5, "n4-c6").unwrap();
        assert!(!report.all_pass());
        for r in &report.relations {
            let expected_fail = r.name.contains("N=4 target") || r.name.contains("extended");
            assert_eq!(
                r.pass, !expected_fail,
                "{}: {} (pass = {})",
                r.name, r.detail, r.pass
            );
        }
    }

    #[test]
    fn calibration_cannot_repair_cross_brackets() {
        let report = calibration_search(3).unwrap();
        assert!(!report.consistent);
        assert!(report.pairs.iter().any(|(_, r)| r.is_none()));
    }
}
