//! Catalogue of bulk decompositions and exact bigraded verification.
//!
//! A bulk state space is an ordered list of summands N'_i (x) N''_i where
//! each factor is a coset module over a fixed side lattice. The built-in
//! examples, with size parameter n and central charge c per side:
//!
//! | id            | side factor                  | summands      | super | c  per side |
//! |---------------|------------------------------|---------------|-------|-------------|
//! | diagD         | D_2n cosets                  | 4             | no    | 2n          |
//! | diagA1        | A_1^2n cosets                | 2^2n          | no    | 2n          |
//! | diagVL        | L = A_1^2n u glued (n even)  | 2^(2n-2)      | no    | 2n          |
//! | diagF         | fermion pair classes D_n+[j] | 4 + 4         | yes   | n           |
//! | torusD        | D_2n (+) fermion D_n classes | 8 + 8         | yes   | 3n          |
//! | tetrahedralK3 | A_1^6 cosets, one marked     | 64 + 64       | yes   | 6           |
//! | golayD12      | sqrt3 Z^6 cosets, ternary    | 729 + 729     | yes   | 6           |
//! | gepner16      | sqrt3 Z^6 cosets, ternary    | 729 + 729     | yes   | 6           |
//!
//! The last two share their side structure; they differ in the glue code:
//! golayD12 glues along a self-dual ternary code of minimum weight 6 read
//! off from a norm 12 frame inside D_12^+, while gepner16 uses the direct
//! product of the zero-sum code with a diagonal shift and admits no even
//! self-dual lattice target.
//!
//! `verify_decomposition` compares, in exact integer arithmetic, the
//! bigraded theta count of the summand list against a direct enumeration
//! of the target lattice union. The target is described in doubled
//! coordinates a = 2 lambda, with parity classes per coordinate block, and
//! is split through an orthogonal decomposition of the ambient space:
//! leading coordinates, half-diagonal pairs (e_i +- e_(m+i))/sqrt 2, or a
//! norm 12 frame of sign vectors. Grades are kept in 1/24 units, so the
//! entry (qe', qe'') counts target vectors with side norms qe'/12 and
//! qe''/12 and the check through bidegree (3, 3) reads both grades up to
//! 72.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use vosa_core::characters::CharacterError;
use vosa_core::codes::{golay12, golay_lambda_basis, CodeError, TernaryCode};
use vosa_core::cyclotomic::{rat, rat_int, Rat};
use vosa_core::lattices::{
    a1_half_split, d_coset_shift, dot, make_lattice, Coset, Lattice, LatticeError, LatticeKind,
    Marking, SignCharacter,
};
use vosa_core::series::SeriesError;

/// Error type for bulk assembly and checks.
#[derive(Debug, Error)]
pub enum BulkError {
    #[error("unknown example: {0}")]
    UnknownExample(String),
    #[error("unsupported size for {family}: n = {n}")]
    UnsupportedSize { family: String, n: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Character(#[from] CharacterError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("insufficient truncation")]
    InsufficientTruncation,
    #[error("not holomorphic: antiholomorphic grade {qe_anti}/24 survives at q^{qe_holo}/24 z^{ze}/6")]
    NotHolomorphic { qe_anti: i64, qe_holo: i64, ze: i64 },
    #[error("matching failed")]
    MatchingFailed,
    #[error("split produced a non-integral grade")]
    BadSplit,
}

/// Bulk sector of a summand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Sector {
    NsNs,
    NsR,
    RNs,
    RR,
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sector::NsNs => "NS-NS",
            Sector::NsR => "NS-R",
            Sector::RNs => "R-NS",
            Sector::RR => "R-R",
        };
        write!(f, "{s}")
    }
}

/// Structural description of one tensor factor; enough to rebuild its
/// graded character and its exact univariate theta table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SideKind {
    /// Coset D_m + [label] in Z^m coordinates.
    DCoset { m: usize, label: usize },
    /// D_dm + [dlabel] orthogonal to a fermion class D_fm + [flabel].
    DFermion { dm: usize, dlabel: usize, fm: usize, flabel: usize },
    /// Orthogonal A_1 copies shifted by half roots; digit per copy.
    /// `marked` means copy 0 carries the elliptic marking.
    A1Digits { digits: Vec<u8>, marked: bool },
    /// Coset of L = A_1^k u (A_1^k + all-halves); digit word modulo
    /// complement.
    LClass { digits: Vec<u8> },
    /// Orthogonal norm 3 copies with shifts t/3 per copy (t the digit).
    TernaryNS { digits: Vec<u8> },
    /// Orthogonal norm 3 copies with shifts (2t+1)/6 per copy.
    TernaryR { digits: Vec<u8> },
}

/// One tensor factor of a summand.
#[derive(Debug, Clone)]
pub struct SideFactor {
    pub label: String,
    pub kind: SideKind,
    /// Coset shift in the coordinates of the side lattice.
    pub shift: Vec<Rat>,
    /// Elliptic marking direction, when the side is marked.
    pub marking: Option<Vec<Rat>>,
    /// Sign character weighting the minus-signed character of the factor.
    pub minus_char: SignCharacter,
}

/// One summand N' (x) N'' of the bulk space.
#[derive(Debug, Clone)]
pub struct Summand {
    pub sector: Sector,
    pub left: SideFactor,
    pub right: SideFactor,
}

/// Per-coordinate parity of doubled coordinates a = 2 lambda.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoordParity {
    Even,
    Odd,
}

/// A block of coordinates with common parity and an optional constraint
/// on the coordinate sum mod 4.
#[derive(Debug, Clone)]
pub struct ClassBlock {
    pub coords: Vec<usize>,
    pub parity: CoordParity,
    pub sum_mod4: Option<i64>,
}

/// A product of blocks describing one congruence class of target vectors.
#[derive(Debug, Clone)]
pub struct BigClass {
    pub name: String,
    pub blocks: Vec<ClassBlock>,
}

/// Orthogonal split assigning each target vector its two side grades.
#[derive(Debug, Clone)]
pub enum SplitRule {
    /// First k coordinates to the left grade, the rest to the right.
    FirstCoords(usize),
    /// Ambient dimension 2m; pairs (i, m+i) split along e_i +- e_(m+i).
    HalfDiag(usize),
    /// Twelve sign rows u_i with u_i . u_j = 12 delta_ij; rows 0..6 give
    /// the left grade.
    Frame(Vec<Vec<i64>>),
}

/// A target lattice union with its split, for one sector.
#[derive(Debug, Clone)]
pub struct TargetUnion {
    pub sector: Sector,
    pub name: String,
    pub dim: usize,
    pub classes: Vec<BigClass>,
    pub split: SplitRule,
}

/// A bulk decomposition: summand list, side lattices, targets.
#[derive(Debug, Clone)]
pub struct BulkDecomposition {
    pub example: String,
    pub family: String,
    pub n: usize,
    pub left_vosa: String,
    pub right_vosa: String,
    /// Central charge of each side.
    pub central_charge: i64,
    pub left_lattice: Lattice,
    pub right_lattice: Lattice,
    pub is_super: bool,
    /// Set when the modular closure needs fractional-phase T twists.
    pub quasi: bool,
    pub summands: Vec<Summand>,
    pub targets: Vec<TargetUnion>,
    /// Representative right coset lattice for the S-matrix reality report.
    pub right_rep: Lattice,
}

impl BulkDecomposition {
    /// The coset realizing one factor of a summand.
    pub fn resolve(&self, side: &SideFactor, left: bool) -> Coset {
        let lat = if left {
            self.left_lattice.clone()
        } else {
            self.right_lattice.clone()
        };
        Coset::with_shift(lat, side.shift.clone())
    }

    /// The marking of a factor, when present.
    pub fn resolve_marking(&self, side: &SideFactor, left: bool) -> Result<Option<Marking>, BulkError> {
        match &side.marking {
            None => Ok(None),
            Some(v) => {
                let coset = self.resolve(side, left);
                Ok(Some(Marking::new(&coset, v.clone())?))
            }
        }
    }

    /// Number of summands containing the bulk vacuum: both shifts lie in
    /// their side lattices and the sector is NS-NS.
    pub fn vacuum_count(&self) -> usize {
        self.summands
            .iter()
            .filter(|s| {
                s.sector == Sector::NsNs
                    && self.left_lattice.contains(&s.left.shift)
                    && self.right_lattice.contains(&s.right.shift)
            })
            .count()
    }

    pub fn target(&self, sector: Sector) -> Option<&TargetUnion> {
        self.targets.iter().find(|t| t.sector == sector)
    }
}

fn ones(m: usize) -> Vec<Rat> {
    vec![Rat::one(); m]
}

fn zeros(m: usize) -> Vec<Rat> {
    vec![Rat::zero(); m]
}

fn digits_label(digits: &[u8]) -> String {
    digits.iter().map(|d| char::from(b'0' + d)).collect()
}

fn bit_digits(word: u64, len: usize) -> Vec<u8> {
    (0..len).map(|i| ((word >> i) & 1) as u8).collect()
}

fn d1_lattice() -> Lattice {
    Lattice::from_rows(vec![vec![rat_int(2)]])
}

fn d_lattice(m: usize) -> Result<Lattice, BulkError> {
    if m == 1 {
        Ok(d1_lattice())
    } else {
        Ok(make_lattice(LatticeKind::D(m))?)
    }
}

/// D_m class data in doubled coordinates: parity and sum mod 4.
fn d_class(m: usize, label: usize) -> (CoordParity, i64) {
    match label {
        0 => (CoordParity::Even, 0),
        1 => (CoordParity::Odd, (m as i64) % 4),
        2 => (CoordParity::Even, 2),
        _ => (CoordParity::Odd, (m as i64 + 2) % 4),
    }
}

fn one_block_class(name: &str, coords: Vec<usize>, parity: CoordParity, sum_mod4: Option<i64>) -> BigClass {
    BigClass {
        name: name.to_string(),
        blocks: vec![ClassBlock { coords, parity, sum_mod4 }],
    }
}

/// D_(2m)^+ viewed in doubled coordinates: the even class with sum 0 mod 4
/// and the odd class with sum 2m mod 4.
fn dplus_classes(dim: usize, sector_shift: i64) -> Vec<BigClass> {
    let m = dim as i64;
    vec![
        one_block_class(
            &format!("even sum {}", sector_shift.rem_euclid(4)),
            (0..dim).collect(),
            CoordParity::Even,
            Some(sector_shift.rem_euclid(4)),
        ),
        one_block_class(
            &format!("odd sum {}", (m + sector_shift).rem_euclid(4)),
            (0..dim).collect(),
            CoordParity::Odd,
            Some((m + sector_shift).rem_euclid(4)),
        ),
    ]
}

fn fermion_minus_ns(dm: usize, fm: usize) -> SignCharacter {
    let mut w = zeros(dm);
    w.extend(ones(fm));
    SignCharacter::Linear { w }
}

fn fermion_minus_r(dm: usize, fm: usize) -> SignCharacter {
    let mut w = zeros(dm);
    w.extend(vec![rat(1, 2); fm]);
    SignCharacter::Exp { w, offset: rat(-(fm as i64), 4) }
}

fn build_diag_d(n: usize) -> Result<BulkDecomposition, BulkError> {
    let m = 2 * n;
    let side = make_lattice(LatticeKind::D(m))?;
    let mut summands = Vec::new();
    for i in 0..4 {
        let shift = d_coset_shift(m, i);
        let mk = |sh: Vec<Rat>| SideFactor {
            label: format!("D{m}+[{i}]"),
            kind: SideKind::DCoset { m, label: i },
            shift: sh,
            marking: None,
            minus_char: SignCharacter::Trivial,
        };
        summands.push(Summand {
            sector: Sector::NsNs,
            left: mk(shift.clone()),
            right: mk(shift),
        });
    }
    let targets = vec![TargetUnion {
        sector: Sector::NsNs,
        name: format!("D{}+", 2 * m),
        dim: 2 * m,
        classes: dplus_classes(2 * m, 0),
        split: SplitRule::FirstCoords(m),
    }];
    Ok(BulkDecomposition {
        example: format!("diagD(n={n})"),
        family: "diagD".into(),
        n,
        left_vosa: format!("V(D{m})"),
        right_vosa: format!("V(D{m})"),
        central_charge: m as i64,
        left_lattice: side.clone(),
        right_lattice: side.clone(),
        is_super: false,
        quasi: false,
        summands,
        targets,
        right_rep: side,
    })
}

/// Left and right A_1^m frames inside R^(2m): rows e_i + e_(m+i) and
/// e_i - e_(m+i).
fn half_frames(m: usize) -> (Lattice, Lattice) {
    let split = a1_half_split(m);
    let rows = split.basis();
    let left = Lattice::from_rows(rows[..m].to_vec());
    let right = Lattice::from_rows(rows[m..].to_vec());
    (left, right)
}

/// Shift by half roots of the chosen half frame for a digit word.
fn half_frame_shift(m: usize, digits: &[u8], left: bool) -> Vec<Rat> {
    let mut v = zeros(2 * m);
    for (i, &d) in digits.iter().enumerate() {
        if d != 0 {
            v[i] += rat(1, 2);
            if left {
                v[m + i] += rat(1, 2);
            } else {
                v[m + i] -= rat(1, 2);
            }
        }
    }
    v
}

fn build_diag_a1(n: usize) -> Result<BulkDecomposition, BulkError> {
    let m = 2 * n;
    let (left, right) = half_frames(m);
    let mut summands = Vec::new();
    for word in 0..(1u64 << m) {
        let digits = bit_digits(word, m);
        let label = format!("A+[{}]", digits_label(&digits));
        summands.push(Summand {
            sector: Sector::NsNs,
            left: SideFactor {
                label: label.clone(),
                kind: SideKind::A1Digits { digits: digits.clone(), marked: false },
                shift: half_frame_shift(m, &digits, true),
                marking: None,
                minus_char: SignCharacter::Trivial,
            },
            right: SideFactor {
                label,
                kind: SideKind::A1Digits { digits: digits.clone(), marked: false },
                shift: half_frame_shift(m, &digits, false),
                marking: None,
                minus_char: SignCharacter::Trivial,
            },
        });
    }
    let targets = vec![TargetUnion {
        sector: Sector::NsNs,
        name: format!("Z^{}", 2 * m),
        dim: 2 * m,
        classes: vec![one_block_class("even", (0..2 * m).collect(), CoordParity::Even, None)],
        split: SplitRule::HalfDiag(m),
    }];
    Ok(BulkDecomposition {
        example: format!("diagA1(n={n})"),
        family: "diagA1".into(),
        n,
        left_vosa: format!("V(A1^{m})"),
        right_vosa: format!("V(A1^{m})"),
        central_charge: m as i64,
        left_lattice: left,
        right_lattice: right,
        is_super: false,
        quasi: false,
        summands,
        targets,
        right_rep: make_lattice(LatticeKind::A1(1))?,
    })
}

/// The glued lattice L = A u (A + all-half-roots) over a half frame.
fn glued_half_lattice(m: usize, left: bool) -> Lattice {
    let (l, r) = half_frames(m);
    let base = if left { l } else { r };
    let mut rows: Vec<Vec<Rat>> = base.basis()[..m - 1].to_vec();
    let glue = half_frame_shift(m, &vec![1u8; m], left);
    rows.push(glue);
    Lattice::from_rows(rows)
}

fn build_diag_vl(n: usize) -> Result<BulkDecomposition, BulkError> {
    if n % 2 != 0 {
        return Err(BulkError::UnsupportedSize { family: "diagVL".into(), n });
    }
    let m = 2 * n;
    let mask = (1u64 << m) - 1;
    let left = glued_half_lattice(m, true);
    let right = glued_half_lattice(m, false);
    let mut summands = Vec::new();
    for word in 0..(1u64 << m) {
        if (word.count_ones() % 2) != 0 || (word ^ mask) < word {
            continue;
        }
        let digits = bit_digits(word, m);
        let label = format!("L+[{}]", digits_label(&digits));
        summands.push(Summand {
            sector: Sector::NsNs,
            left: SideFactor {
                label: label.clone(),
                kind: SideKind::LClass { digits: digits.clone() },
                shift: half_frame_shift(m, &digits, true),
                marking: None,
                minus_char: SignCharacter::Trivial,
            },
            right: SideFactor {
                label,
                kind: SideKind::LClass { digits: digits.clone() },
                shift: half_frame_shift(m, &digits, false),
                marking: None,
                minus_char: SignCharacter::Trivial,
            },
        });
    }
    let targets = vec![TargetUnion {
        sector: Sector::NsNs,
        name: format!("D{}+", 2 * m),
        dim: 2 * m,
        classes: dplus_classes(2 * m, 0),
        split: SplitRule::HalfDiag(m),
    }];
    Ok(BulkDecomposition {
        example: format!("diagVL(n={n})"),
        family: "diagVL".into(),
        n,
        left_vosa: format!("V(L{m})"),
        right_vosa: format!("V(L{m})"),
        central_charge: m as i64,
        left_lattice: left.clone(),
        right_lattice: right,
        is_super: false,
        quasi: false,
        summands,
        targets,
        right_rep: left,
    })
}

fn build_diag_f(n: usize) -> Result<BulkDecomposition, BulkError> {
    let side = d_lattice(n)?;
    let mut summands = Vec::new();
    for (sector, labels) in [(Sector::NsNs, [0usize, 2]), (Sector::RR, [1, 3])] {
        for i in labels {
            for j in labels {
                let minus = if sector == Sector::NsNs {
                    SignCharacter::Linear { w: ones(n) }
                } else {
                    SignCharacter::Exp { w: vec![rat(1, 2); n], offset: rat(-(n as i64), 4) }
                };
                summands.push(Summand {
                    sector,
                    left: SideFactor {
                        label: format!("F[{i}]"),
                        kind: SideKind::DCoset { m: n, label: i },
                        shift: d_coset_shift(n, i),
                        marking: None,
                        minus_char: minus.clone(),
                    },
                    right: SideFactor {
                        label: format!("F[{j}]"),
                        kind: SideKind::DCoset { m: n, label: j },
                        shift: d_coset_shift(n, j),
                        marking: None,
                        minus_char: minus,
                    },
                });
            }
        }
    }
    let targets = vec![
        TargetUnion {
            sector: Sector::NsNs,
            name: format!("Z^{}", 2 * n),
            dim: 2 * n,
            classes: vec![one_block_class("even", (0..2 * n).collect(), CoordParity::Even, None)],
            split: SplitRule::FirstCoords(n),
        },
        TargetUnion {
            sector: Sector::RR,
            name: format!("(Z+1/2)^{}", 2 * n),
            dim: 2 * n,
            classes: vec![one_block_class("odd", (0..2 * n).collect(), CoordParity::Odd, None)],
            split: SplitRule::FirstCoords(n),
        },
    ];
    let rep = if n >= 2 { d_lattice(n)? } else { d1_lattice() };
    Ok(BulkDecomposition {
        example: format!("diagF(n={n})"),
        family: "diagF".into(),
        n,
        left_vosa: format!("F({})", 2 * n),
        right_vosa: format!("F({})", 2 * n),
        central_charge: n as i64,
        left_lattice: side.clone(),
        right_lattice: side,
        is_super: true,
        quasi: false,
        summands,
        targets,
        right_rep: rep,
    })
}

fn build_torus_d(n: usize) -> Result<BulkDecomposition, BulkError> {
    let dm = 2 * n;
    let side = make_lattice(LatticeKind::D(dm))?.direct_sum(&d_lattice(n)?);
    let mut marking = zeros(dm);
    marking.extend(ones(n));
    let mut summands = Vec::new();
    for (sector, labels) in [(Sector::NsNs, [0usize, 2]), (Sector::RR, [1, 3])] {
        for i in 0..4 {
            for j in labels {
                for jr in labels {
                    let minus = if sector == Sector::NsNs {
                        fermion_minus_ns(dm, n)
                    } else {
                        fermion_minus_r(dm, n)
                    };
                    let mk = |f: usize| {
                        let mut shift = d_coset_shift(dm, i);
                        shift.extend(d_coset_shift(n, f));
                        SideFactor {
                            label: format!("D{dm}+[{i}]|F[{f}]"),
                            kind: SideKind::DFermion { dm, dlabel: i, fm: n, flabel: f },
                            shift,
                            marking: Some(marking.clone()),
                            minus_char: minus.clone(),
                        }
                    };
                    summands.push(Summand { sector, left: mk(j), right: mk(jr) });
                }
            }
        }
    }
    let dim = 6 * n;
    let d_coords: Vec<usize> = (0..dm).chain(3 * n..3 * n + dm).collect();
    let f_coords: Vec<usize> = (dm..3 * n).chain(3 * n + dm..dim).collect();
    let torus_classes = |f_parity: CoordParity| -> Vec<BigClass> {
        [(CoordParity::Even, 0i64), (CoordParity::Odd, (2 * dm as i64) % 4)]
            .into_iter()
            .map(|(p, s)| BigClass {
                name: format!("D part {:?} sum {s}, fermion part {:?}", p, f_parity),
                blocks: vec![
                    ClassBlock { coords: d_coords.clone(), parity: p, sum_mod4: Some(s) },
                    ClassBlock { coords: f_coords.clone(), parity: f_parity, sum_mod4: None },
                ],
            })
            .collect()
    };
    let targets = vec![
        TargetUnion {
            sector: Sector::NsNs,
            name: format!("D{}+ x Z^{}", 2 * dm, 2 * n),
            dim,
            classes: torus_classes(CoordParity::Even),
            split: SplitRule::FirstCoords(3 * n),
        },
        TargetUnion {
            sector: Sector::RR,
            name: format!("D{}+ x (Z+1/2)^{}", 2 * dm, 2 * n),
            dim,
            classes: torus_classes(CoordParity::Odd),
            split: SplitRule::FirstCoords(3 * n),
        },
    ];
    Ok(BulkDecomposition {
        example: format!("torusD(n={n})"),
        family: "torusD".into(),
        n,
        left_vosa: format!("F({}) x V(D{dm})", 2 * n),
        right_vosa: format!("F({}) x V(D{dm})", 2 * n),
        central_charge: 3 * n as i64,
        left_lattice: side.clone(),
        right_lattice: side,
        is_super: true,
        quasi: false,
        summands,
        targets,
        right_rep: make_lattice(LatticeKind::D(dm))?,
    })
}

fn build_tetrahedral() -> Result<BulkDecomposition, BulkError> {
    let m = 6usize;
    let mask = (1u64 << m) - 1;
    let (left, right) = half_frames(m);
    let mut mark_left = zeros(2 * m);
    mark_left[0] = Rat::one();
    mark_left[m] = Rat::one();
    let mut mark_right = zeros(2 * m);
    mark_right[0] = Rat::one();
    mark_right[m] = -Rat::one();
    let minus_of = |w: &[Rat], sector: Sector| SignCharacter::Exp {
        w: w.iter().map(|x| x / rat_int(2)).collect(),
        offset: if sector == Sector::NsNs { Rat::zero() } else { rat(-1, 2) },
    };
    let mut summands = Vec::new();
    for (sector, par) in [(Sector::NsNs, 0u32), (Sector::RR, 1u32)] {
        for word in 0..(1u64 << m) {
            if word.count_ones() % 2 != par {
                continue;
            }
            let digits = bit_digits(word, m);
            let co_digits = bit_digits(word ^ mask, m);
            let side = |digits: &[u8], is_left: bool| SideFactor {
                label: format!("A+[{}]", digits_label(digits)),
                kind: SideKind::A1Digits { digits: digits.to_vec(), marked: true },
                shift: half_frame_shift(m, digits, is_left),
                marking: Some(if is_left { mark_left.clone() } else { mark_right.clone() }),
                minus_char: minus_of(if is_left { &mark_left } else { &mark_right }, sector),
            };
            summands.push(Summand {
                sector,
                left: side(&digits, true),
                right: side(&digits, false),
            });
            summands.push(Summand {
                sector,
                left: side(&co_digits, true),
                right: side(&digits, false),
            });
        }
    }
    let targets = vec![
        TargetUnion {
            sector: Sector::NsNs,
            name: "D12+".into(),
            dim: 2 * m,
            classes: dplus_classes(2 * m, 0),
            split: SplitRule::HalfDiag(m),
        },
        TargetUnion {
            sector: Sector::RR,
            name: "D12+[2] u D12+[3]".into(),
            dim: 2 * m,
            classes: dplus_classes(2 * m, 2),
            split: SplitRule::HalfDiag(m),
        },
    ];
    Ok(BulkDecomposition {
        example: "tetrahedralK3".into(),
        family: "tetrahedralK3".into(),
        n: 3,
        left_vosa: "V(L6)".into(),
        right_vosa: "V(L6)".into(),
        central_charge: 6,
        left_lattice: left,
        right_lattice: right,
        is_super: true,
        quasi: false,
        summands,
        targets,
        right_rep: glued_half_lattice(m, true),
    })
}

/// Digits of a vector against a norm 3 frame row set, mod 3.
fn frame_digits(v: &[Rat], frame: &[Vec<Rat>]) -> Vec<u8> {
    frame
        .iter()
        .map(|row| {
            let p = dot(v, row);
            assert!(p.is_integer(), "frame pairing must be integral");
            let r = p.to_integer() % BigInt::from(3);
            let r = if r.is_negative() { r + 3 } else { r };
            u8::try_from(r).expect("small residue")
        })
        .collect()
}

/// The ternary glue code of D_12^+ over a norm 12 sign frame, the frame
/// rows permuted so that the word (1^6 2^6) is in the code. Returns the
/// permuted integer frame rows and the permuted code words.
fn golay_frame() -> Result<(Vec<Vec<i64>>, Vec<Vec<u8>>), BulkError> {
    let code = golay12()?;
    let lambda = golay_lambda_basis(&code)?;
    let dplus = make_lattice(LatticeKind::DPlus(12))?;
    let gens: Vec<Vec<u8>> = dplus.basis().iter().map(|b| frame_digits(b, &lambda)).collect();
    let glue = TernaryCode::from_generators(12, gens);
    assert_eq!(glue.dim(), 6, "glue code of the frame has dimension 6");
    let split_word = glue
        .words()
        .iter()
        .find(|w| {
            w.iter().filter(|&&d| d == 1).count() == 6 && w.iter().filter(|&&d| d == 2).count() == 6
        })
        .expect("a (1^6 2^6) word exists in the glue code");
    let mut perm: Vec<usize> = (0..12).filter(|&j| split_word[j] == 1).collect();
    perm.extend((0..12).filter(|&j| split_word[j] == 2));
    let rows: Vec<Vec<i64>> = perm
        .iter()
        .map(|&j| {
            lambda[j]
                .iter()
                .map(|x| {
                    let d = x * rat_int(2);
                    assert!(d.is_integer(), "doubled frame entries are integers");
                    let v = d.to_integer();
                    i64::try_from(v).expect("small entry")
                })
                .collect()
        })
        .collect();
    let words: Vec<Vec<u8>> = glue
        .words()
        .iter()
        .map(|w| perm.iter().map(|&j| w[j]).collect())
        .collect();
    Ok((rows, words))
}

fn sqrt3_shift(digits: &[u8], halves: bool) -> Vec<Rat> {
    let mut v = zeros(3 * digits.len());
    for (i, &t) in digits.iter().enumerate() {
        let num = if halves { 2 * t as i64 + 1 } else { 2 * t as i64 };
        let x = rat(num, 6);
        for j in 0..3 {
            v[3 * i + j] = x.clone();
        }
    }
    v
}

fn ternary_side(digits: &[u8], sector: Sector) -> SideFactor {
    let k = digits.len();
    let marking: Vec<Rat> = vec![rat(1, 3); 3 * k];
    let w: Vec<Rat> = vec![rat(1, 6); 3 * k];
    let (kind, shift, offset, tag) = match sector {
        Sector::RR => (
            SideKind::TernaryR { digits: digits.to_vec() },
            sqrt3_shift(digits, true),
            rat(-1, 2),
            "+h",
        ),
        _ => (
            SideKind::TernaryNS { digits: digits.to_vec() },
            sqrt3_shift(digits, false),
            Rat::zero(),
            "",
        ),
    };
    SideFactor {
        label: format!("K+[{}]{tag}", digits_label(digits)),
        kind,
        shift,
        marking: Some(marking),
        minus_char: SignCharacter::Exp { w, offset },
    }
}

fn ternary_bulk(
    example: &str,
    pairs: Vec<(Vec<u8>, Vec<u8>)>,
    targets: Vec<TargetUnion>,
) -> Result<BulkDecomposition, BulkError> {
    let side = make_lattice(LatticeKind::Sqrt3Z(6))?;
    let mut summands = Vec::new();
    for sector in [Sector::NsNs, Sector::RR] {
        for (l, r) in &pairs {
            summands.push(Summand {
                sector,
                left: ternary_side(l, sector),
                right: ternary_side(r, sector),
            });
        }
    }
    Ok(BulkDecomposition {
        example: example.into(),
        family: example.into(),
        n: 6,
        left_vosa: "V(sqrt3 Z^6)".into(),
        right_vosa: "V(sqrt3 Z^6)".into(),
        central_charge: 6,
        left_lattice: side.clone(),
        right_lattice: side,
        is_super: true,
        quasi: true,
        summands,
        targets,
        right_rep: make_lattice(LatticeKind::Sqrt3Z(1))?,
    })
}

fn build_golay() -> Result<BulkDecomposition, BulkError> {
    let (rows, words) = golay_frame()?;
    let pairs: Vec<(Vec<u8>, Vec<u8>)> = words
        .iter()
        .map(|w| (w[..6].to_vec(), w[6..].to_vec()))
        .collect();
    let targets = vec![
        TargetUnion {
            sector: Sector::NsNs,
            name: "D12+".into(),
            dim: 12,
            classes: dplus_classes(12, 0),
            split: SplitRule::Frame(rows.clone()),
        },
        TargetUnion {
            sector: Sector::RR,
            name: "D12+[2] u D12+[3]".into(),
            dim: 12,
            classes: dplus_classes(12, 2),
            split: SplitRule::Frame(rows),
        },
    ];
    ternary_bulk("golayD12", pairs, targets)
}

fn build_gepner() -> Result<BulkDecomposition, BulkError> {
    let gens: Vec<Vec<u8>> = (0..5)
        .map(|i| {
            let mut g = vec![0u8; 6];
            g[i] = 1;
            g[i + 1] = 2;
            g
        })
        .collect();
    let zero_sum = TernaryCode::from_generators(6, gens);
    assert_eq!(zero_sum.words().len(), 243);
    let mut pairs = Vec::new();
    for a in 0..3u8 {
        for c in zero_sum.words() {
            let l: Vec<u8> = c.iter().map(|&x| (x + a) % 3).collect();
            let r: Vec<u8> = c.iter().map(|&x| (x + 3 - a) % 3).collect();
            pairs.push((l, r));
        }
    }
    ternary_bulk("gepner16", pairs, Vec::new())
}

/// Builds a catalogued bulk decomposition.
pub fn build_bulk(example: &str, n: usize) -> Result<BulkDecomposition, BulkError> {
    match example {
        "diagD" if (1..=3).contains(&n) => build_diag_d(n),
        "diagA1" if (1..=3).contains(&n) => build_diag_a1(n),
        "diagVL" if n == 2 => build_diag_vl(n),
        "diagVL" => Err(BulkError::UnsupportedSize { family: "diagVL".into(), n }),
        "diagF" if (1..=3).contains(&n) => build_diag_f(n),
        "torusD" if (1..=2).contains(&n) => build_torus_d(n),
        "tetrahedralK3" => build_tetrahedral(),
        "golayD12" => build_golay(),
        "gepner16" => build_gepner(),
        "diagD" | "diagA1" | "diagF" | "torusD" => {
            Err(BulkError::UnsupportedSize { family: example.into(), n })
        }
        _ => Err(BulkError::UnknownExample(example.to_string())),
    }
}

/// All example ids accepted by `build_bulk`, with their default sizes.
pub fn example_catalogue() -> Vec<(&'static str, Vec<usize>)> {
    vec![
        ("diagD", vec![1, 2, 3]),
        ("diagA1", vec![1, 2, 3]),
        ("diagVL", vec![2]),
        ("diagF", vec![1, 2, 3]),
        ("torusD", vec![1]),
        ("tetrahedralK3", vec![3]),
        ("golayD12", vec![6]),
        ("gepner16", vec![6]),
    ]
}

// ---------------------------------------------------------------------------
// Exact bigraded verification.
// ---------------------------------------------------------------------------

/// Bigraded exponent table: (qe', qe'') in 1/24 units -> count.
pub type BiTable = BTreeMap<(i64, i64), i64>;

/// Univariate exponent table: qe in 1/24 units -> count.
pub type QTable = BTreeMap<i64, i64>;

fn isqrt(x: i64) -> i64 {
    if x < 0 {
        return -1;
    }
    let mut r = (x as f64).sqrt() as i64;
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    while r * r > x {
        r -= 1;
    }
    r
}

struct ClassEnum<'a> {
    parity: Vec<CoordParity>,
    block_of: Vec<usize>,
    blocks: &'a [ClassBlock],
    sums: Vec<i64>,
    b1: i64,
    b2: i64,
    out: BiTable,
}

impl<'a> ClassEnum<'a> {
    fn new(dim: usize, class: &'a BigClass, b1: i64, b2: i64) -> Result<Self, BulkError> {
        let mut parity = vec![None; dim];
        let mut block_of = vec![usize::MAX; dim];
        for (bi, blk) in class.blocks.iter().enumerate() {
            for &c in &blk.coords {
                assert!(c < dim && parity[c].is_none(), "blocks cover each coordinate once");
                parity[c] = Some(blk.parity);
                block_of[c] = bi;
            }
        }
        let parity: Option<Vec<CoordParity>> = parity.into_iter().collect();
        let parity = parity.expect("blocks cover all coordinates");
        Ok(ClassEnum {
            parity,
            block_of,
            blocks: &class.blocks,
            sums: vec![0; class.blocks.len()],
            b1,
            b2,
            out: BTreeMap::new(),
        })
    }

    fn coord_values(&self, j: usize, budget: i64) -> Vec<i64> {
        // All a with 3 a^2 <= budget and the parity of coordinate j.
        let amax = isqrt(budget / 3);
        let mut vals = Vec::new();
        let start = match self.parity[j] {
            CoordParity::Even => 0,
            CoordParity::Odd => 1,
        };
        let mut a = start;
        while a <= amax {
            vals.push(a);
            if a != 0 {
                vals.push(-a);
            }
            a += 2;
        }
        vals
    }

    fn sums_ok(&self) -> bool {
        self.blocks
            .iter()
            .enumerate()
            .all(|(bi, blk)| match blk.sum_mod4 {
                None => true,
                Some(m) => self.sums[bi].rem_euclid(4) == m,
            })
    }

    fn emit(&mut self, qe1: i64, qe2: i64) {
        if qe1 <= self.b1 && qe2 <= self.b2 && self.sums_ok() {
            *self.out.entry((qe1, qe2)).or_insert(0) += 1;
        }
    }

    fn run_first(&mut self, k: usize, dim: usize) {
        self.rec_first(0, k, dim, 0, 0);
    }

    fn rec_first(&mut self, j: usize, k: usize, dim: usize, acc1: i64, acc2: i64) {
        if j == dim {
            self.emit(acc1, acc2);
            return;
        }
        let budget = if j < k { self.b1 - acc1 } else { self.b2 - acc2 };
        for a in self.coord_values(j, budget) {
            self.sums[self.block_of[j]] += a;
            let add = 3 * a * a;
            if j < k {
                self.rec_first(j + 1, k, dim, acc1 + add, acc2);
            } else {
                self.rec_first(j + 1, k, dim, acc1, acc2 + add);
            }
            self.sums[self.block_of[j]] -= a;
        }
    }

    fn run_half(&mut self, m: usize) {
        self.rec_half(0, m, 0, 0);
    }

    fn rec_half(&mut self, p: usize, m: usize, acc1: i64, acc2: i64) {
        if p == m {
            self.emit(acc1, acc2);
            return;
        }
        let budget = (self.b1 - acc1) + (self.b2 - acc2);
        let avals = self.coord_values(p, budget);
        let bvals = self.coord_values(m + p, budget);
        for &a in &avals {
            for &b in &bvals {
                let s = a + b;
                let d = a - b;
                assert!(s % 2 == 0, "half-diagonal split needs equal pair parity");
                let c1 = 3 * (s * s) / 2;
                let c2 = 3 * (d * d) / 2;
                if acc1 + c1 > self.b1 || acc2 + c2 > self.b2 {
                    continue;
                }
                self.sums[self.block_of[p]] += a;
                self.sums[self.block_of[m + p]] += b;
                self.rec_half(p + 1, m, acc1 + c1, acc2 + c2);
                self.sums[self.block_of[p]] -= a;
                self.sums[self.block_of[m + p]] -= b;
            }
        }
    }

    fn run_frame(&mut self, rows: &[Vec<i64>], dim: usize) -> Result<(), BulkError> {
        let mut g = vec![0i64; rows.len()];
        self.rec_frame(0, dim, 0, rows, &mut g)
    }

    fn rec_frame(
        &mut self,
        j: usize,
        dim: usize,
        acc: i64,
        rows: &[Vec<i64>],
        g: &mut Vec<i64>,
    ) -> Result<(), BulkError> {
        if j == dim {
            let mut qe1 = 0i64;
            let mut qe2 = 0i64;
            for (i, &gi) in g.iter().enumerate() {
                if gi % 2 != 0 {
                    return Err(BulkError::BadSplit);
                }
                let h = gi / 2;
                if i < 6 {
                    qe1 += h * h;
                } else {
                    qe2 += h * h;
                }
            }
            assert_eq!(qe1 + qe2, acc, "frame grades add up to the total norm");
            self.emit(qe1, qe2);
            return Ok(());
        }
        let budget = self.b1 + self.b2 - acc;
        for a in self.coord_values(j, budget) {
            self.sums[self.block_of[j]] += a;
            for (i, row) in rows.iter().enumerate() {
                g[i] += a * row[j];
            }
            self.rec_frame(j + 1, dim, acc + 3 * a * a, rows, g)?;
            for (i, row) in rows.iter().enumerate() {
                g[i] -= a * row[j];
            }
            self.sums[self.block_of[j]] -= a;
        }
        Ok(())
    }
}

/// Exact bigraded count of one target class under the split rule.
fn class_table(
    class: &BigClass,
    dim: usize,
    split: &SplitRule,
    b1: i64,
    b2: i64,
) -> Result<BiTable, BulkError> {
    let mut en = ClassEnum::new(dim, class, b1, b2)?;
    match split {
        SplitRule::FirstCoords(k) => en.run_first(*k, dim),
        SplitRule::HalfDiag(m) => {
            assert_eq!(dim, 2 * m);
            en.run_half(*m);
        }
        SplitRule::Frame(rows) => {
            assert_eq!(dim, 12);
            assert_eq!(rows.len(), 12);
            en.run_frame(rows, dim)?;
        }
    }
    Ok(en.out)
}

/// Exact bigraded count of the whole target union.
pub fn target_table(target: &TargetUnion, b1: i64, b2: i64) -> Result<BiTable, BulkError> {
    let mut out = BiTable::new();
    for class in &target.classes {
        for (k, v) in class_table(class, target.dim, &target.split, b1, b2)? {
            *out.entry(k).or_insert(0) += v;
        }
    }
    Ok(out)
}

fn conv_q(a: &QTable, b: &QTable, bound: i64) -> QTable {
    let mut out = QTable::new();
    for (&x, &cx) in a {
        for (&y, &cy) in b {
            if x + y > bound {
                break;
            }
            *out.entry(x + y).or_insert(0) += cx * cy;
        }
    }
    out
}

/// qe table of one A_1 copy with digit c: qe = 24 (k + c/2)^2.
fn t_a1_digit(c: u8, bound: i64) -> QTable {
    let mut out = QTable::new();
    let mut push = |qe: i64| {
        if qe <= bound {
            *out.entry(qe).or_insert(0) += 1;
        }
    };
    let mut k = 0i64;
    loop {
        let m = 2 * k + c as i64;
        let qe = 6 * m * m;
        if qe > bound && k > 0 {
            break;
        }
        push(qe);
        if m != 0 {
            push(qe); // negative partner -m
        }
        k += 1;
    }
    out
}

/// qe table of one norm 3 copy with residue s mod 6: qe = (6k + s)^2.
fn t_sqrt3_digit(s: i64, bound: i64) -> QTable {
    let mut out = QTable::new();
    let mmax = isqrt(bound);
    let mut m = s.rem_euclid(6) - 6 * ((s.rem_euclid(6) + 6 * ((mmax / 6) + 2)) / 6);
    // Smallest m = s mod 6 with m >= -mmax - 6.
    while m < -mmax - 6 {
        m += 6;
    }
    while m <= mmax {
        let qe = m * m;
        if m >= -mmax && qe <= bound {
            *out.entry(qe).or_insert(0) += 1;
        }
        m += 6;
    }
    out
}

fn t_dcoset(m: usize, label: usize, bound: i64) -> Result<QTable, BulkError> {
    let (parity, s) = d_class(m, label);
    let class = one_block_class("dcoset", (0..m).collect(), parity, Some(s));
    let table = class_table(&class, m, &SplitRule::FirstCoords(m), bound, 0)?;
    Ok(table.into_iter().map(|((q, _), c)| (q, c)).collect())
}

/// Exact univariate qe table of one side factor, up to the bound.
pub fn side_qtable(kind: &SideKind, bound: i64) -> Result<QTable, BulkError> {
    match kind {
        SideKind::DCoset { m, label } => t_dcoset(*m, *label, bound),
        SideKind::DFermion { dm, dlabel, fm, flabel } => {
            let a = t_dcoset(*dm, *dlabel, bound)?;
            let b = t_dcoset(*fm, *flabel, bound)?;
            Ok(conv_q(&a, &b, bound))
        }
        SideKind::A1Digits { digits, .. } => {
            let mut acc: QTable = [(0i64, 1i64)].into_iter().collect();
            for &c in digits {
                acc = conv_q(&acc, &t_a1_digit(c, bound), bound);
            }
            Ok(acc)
        }
        SideKind::LClass { digits } => {
            let comp: Vec<u8> = digits.iter().map(|d| 1 - d).collect();
            let a = side_qtable(&SideKind::A1Digits { digits: digits.clone(), marked: false }, bound)?;
            let b = side_qtable(&SideKind::A1Digits { digits: comp, marked: false }, bound)?;
            let mut out = a;
            for (k, v) in b {
                *out.entry(k).or_insert(0) += v;
            }
            Ok(out)
        }
        SideKind::TernaryNS { digits } => {
            let mut acc: QTable = [(0i64, 1i64)].into_iter().collect();
            for &t in digits {
                acc = conv_q(&acc, &t_sqrt3_digit(2 * t as i64, bound), bound);
            }
            Ok(acc)
        }
        SideKind::TernaryR { digits } => {
            let mut acc: QTable = [(0i64, 1i64)].into_iter().collect();
            for &t in digits {
                acc = conv_q(&acc, &t_sqrt3_digit(2 * t as i64 + 1, bound), bound);
            }
            Ok(acc)
        }
    }
}

/// First differing bigraded coefficient of a comparison.
#[derive(Debug, Clone, Serialize)]
pub struct MismatchAt {
    pub qe24_left: i64,
    pub qe24_right: i64,
    pub expected: i64,
    pub found: i64,
}

/// Outcome of an exact decomposition check for one sector.
#[derive(Debug, Clone, Serialize)]
pub struct DecompReport {
    pub example: String,
    pub sector: String,
    pub target: String,
    pub pass: bool,
    pub entries_compared: usize,
    pub first_mismatch: Option<MismatchAt>,
}

/// Sum of left (x) right exponent tables over the summands of a sector.
pub fn summand_table(
    b: &BulkDecomposition,
    sector: Sector,
    b1: i64,
    b2: i64,
) -> Result<BiTable, BulkError> {
    let mut memo: BTreeMap<(SideKind, i64), QTable> = BTreeMap::new();
    let mut get = |kind: &SideKind, bound: i64| -> Result<QTable, BulkError> {
        if let Some(t) = memo.get(&(kind.clone(), bound)) {
            return Ok(t.clone());
        }
        let t = side_qtable(kind, bound)?;
        memo.insert((kind.clone(), bound), t.clone());
        Ok(t)
    };
    let mut out = BiTable::new();
    for s in b.summands.iter().filter(|s| s.sector == sector) {
        let lt = get(&s.left.kind, b1)?;
        let rt = get(&s.right.kind, b2)?;
        for (&x, &cx) in &lt {
            for (&y, &cy) in &rt {
                *out.entry((x, y)).or_insert(0) += cx * cy;
            }
        }
    }
    Ok(out)
}

/// Compares the summand list of a sector against its target union through
/// the bidegree (degrees.0, degrees.1) in integer q powers.
pub fn verify_decomposition(
    b: &BulkDecomposition,
    target: &TargetUnion,
    degrees: (i64, i64),
) -> Result<DecompReport, BulkError> {
    let (b1, b2) = (24 * degrees.0, 24 * degrees.1);
    let big = target_table(target, b1, b2)?;
    let got = summand_table(b, target.sector, b1, b2)?;
    let mut first = None;
    let mut keys: Vec<(i64, i64)> = big.keys().chain(got.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    for k in &keys {
        let e = big.get(k).copied().unwrap_or(0);
        let f = got.get(k).copied().unwrap_or(0);
        if e != f {
            first = Some(MismatchAt {
                qe24_left: k.0,
                qe24_right: k.1,
                expected: e,
                found: f,
            });
            break;
        }
    }
    Ok(DecompReport {
        example: b.example.clone(),
        sector: target.sector.to_string(),
        target: target.name.clone(),
        pass: first.is_none(),
        entries_compared: keys.len(),
        first_mismatch: first,
    })
}
