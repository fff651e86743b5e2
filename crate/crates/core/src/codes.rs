//! Binary D-type codes, the extended ternary Golay code and marked weight
//! enumerators.
//!
//! The binary family lives in F_2^(2n): mirrored words (c | c) whose total
//! weight is divisible by four, together with four labeled coset
//! representatives that match the glue classes of the lattice D_2n over a
//! half-split orthogonal frame.
//!
//! The ternary code is built as the extended quadratic residue code of
//! length 12: factor x^11 - 1 over F_3, span the cyclic code of a degree 5
//! factor, extend by a checksum coordinate so the result is self-orthogonal,
//! and rescale coordinates so the all-ones word is a codeword. Weight
//! distribution of the result:
//!
//! | weight | count |
//! |--------|-------|
//! | 0      | 1     |
//! | 6      | 264   |
//! | 9      | 440   |
//! | 12     | 24    |
//!
//! Halving the signed lifts of twelve particular weight-12 words yields
//! twelve pairwise orthogonal vectors of norm 3, the bridge from the code to
//! a unimodular lattice frame.

use crate::cyclotomic::{rat, Rat};
use num_traits::Zero;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

/// Errors from code constructions.
#[derive(Debug, Error, PartialEq, Eq, Clone)]
pub enum CodeError {
    #[error("golay construction invalid")]
    GolayConstructionInvalid,
    #[error("lambda basis invalid")]
    LambdaBasisInvalid,
}

/// A binary linear code with words stored as bitmasks (coordinate i = bit i).
#[derive(Debug, Clone)]
pub struct BinaryCode {
    length: usize,
    gens: Vec<u64>,
    words: Vec<u64>,
}

impl BinaryCode {
    /// Spans the given generators.
    pub fn from_generators(length: usize, gens: Vec<u64>) -> Self {
        assert!(length <= 63);
        let mut words = vec![0u64];
        for &g in &gens {
            let mut next = words.clone();
            for w in &words {
                next.push(w ^ g);
            }
            next.sort_unstable();
            next.dedup();
            words = next;
        }
        BinaryCode {
            length,
            gens,
            words,
        }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn generators(&self) -> &[u64] {
        &self.gens
    }

    pub fn contains(&self, w: u64) -> bool {
        self.words.binary_search(&w).is_ok()
    }

    /// Weight counts: weight -> number of words.
    pub fn weight_distribution(&self) -> BTreeMap<u32, usize> {
        let mut out = BTreeMap::new();
        for w in &self.words {
            *out.entry(w.count_ones()).or_insert(0) += 1;
        }
        out
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        let gens = self
            .gens
            .iter()
            .map(|&g| (0..self.length).map(|i| ((g >> i) & 1) as u8).collect())
            .collect();
        serde_json::to_string(&CodeJson {
            q: 2,
            n: self.length,
            gens,
        })
        .expect("code serialization")
    }
}

#[derive(Serialize)]
struct CodeJson {
    q: u8,
    n: usize,
    gens: Vec<Vec<u8>>,
}

/// The mirrored binary code in F_2^(2n) with its four glue representatives.
#[derive(Debug, Clone)]
pub struct DCodeFamily {
    pub code: BinaryCode,
    /// Coset representatives labeled 0..3: zero, (1^n 0^n),
    /// (0^(n-1) 1 0^(n-1) 1) and their sum.
    pub reps: [u64; 4],
}

/// Builds the D-type code of length 2n: words (c | c) with weight divisible
/// by four, i.e. c of even weight.
pub fn d_code_family(n: usize) -> DCodeFamily {
    assert!(n >= 1 && 2 * n <= 63);
    let gens: Vec<u64> = (0..n.saturating_sub(1))
        .map(|i| {
            let u = (1u64 << i) | (1u64 << (i + 1));
            u | (u << n)
        })
        .collect();
    let code = BinaryCode::from_generators(2 * n, gens);
    let rep1 = (1u64 << n) - 1;
    let rep2 = (1u64 << (n - 1)) | (1u64 << (2 * n - 1));
    DCodeFamily {
        code,
        reps: [0, rep1, rep2, rep1 ^ rep2],
    }
}

/// A ternary linear code with entries in {0, 1, 2} and sorted word list.
#[derive(Debug, Clone)]
pub struct TernaryCode {
    length: usize,
    gens: Vec<Vec<u8>>,
    words: Vec<Vec<u8>>,
}

impl TernaryCode {
    /// Spans the given generators over F_3.
    pub fn from_generators(length: usize, gens: Vec<Vec<u8>>) -> Self {
        let mut words: Vec<Vec<u8>> = vec![vec![0; length]];
        for g in &gens {
            assert_eq!(g.len(), length);
            let mut next = words.clone();
            for w in &words {
                for mult in 1..3u8 {
                    next.push(
                        w.iter()
                            .zip(g)
                            .map(|(&a, &b)| (a + mult * b) % 3)
                            .collect(),
                    );
                }
            }
            next.sort_unstable();
            next.dedup();
            words = next;
        }
        TernaryCode {
            length,
            gens,
            words,
        }
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn words(&self) -> &[Vec<u8>] {
        &self.words
    }

    pub fn generators(&self) -> &[Vec<u8>] {
        &self.gens
    }

    pub fn contains(&self, w: &[u8]) -> bool {
        self.words.binary_search_by(|cand| cand.as_slice().cmp(w)).is_ok()
    }

    /// F_3 dimension.
    pub fn dim(&self) -> u32 {
        let mut d = 0;
        let mut size = self.words.len();
        while size > 1 {
            size /= 3;
            d += 1;
        }
        d
    }

    /// Weight counts: weight -> number of words.
    pub fn weight_distribution(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for w in &self.words {
            let wt = w.iter().filter(|&&x| x != 0).count();
            *out.entry(wt).or_insert(0) += 1;
        }
        out
    }

    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&CodeJson {
            q: 3,
            n: self.length,
            gens: self.gens.clone(),
        })
        .expect("code serialization")
    }
}

/// Dot product over F_3.
pub fn ternary_dot(a: &[u8], b: &[u8]) -> u8 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum::<u8>() % 3
}

/// Signed lift of a ternary digit: 0 -> 0, 1 -> +1, 2 -> -1.
pub fn signed_lift(x: u8) -> i64 {
    match x {
        0 => 0,
        1 => 1,
        _ => -1,
    }
}

fn poly_mul_mod3(a: &[u8], b: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % 3;
        }
    }
    out
}

/// Remainder of x^11 - 1 by a monic divisor, over F_3.
fn poly_rem_x11m1(divisor: &[u8]) -> Vec<u8> {
    // x^11 - 1 = x^11 + 2 over F_3, little-endian coefficients.
    let mut r = vec![0u8; 12];
    r[0] = 2;
    r[11] = 1;
    let d = divisor.len() - 1;
    assert_eq!(divisor[d], 1, "divisor must be monic");
    for k in (d..12).rev() {
        let c = r[k];
        if c == 0 {
            continue;
        }
        for (j, &g) in divisor.iter().enumerate() {
            let sub = (c * g) % 3;
            r[k - d + j] = (r[k - d + j] + 3 - sub) % 3;
        }
    }
    r.truncate(d);
    r
}

/// Builds the extended ternary Golay code of length 12, normalized so the
/// all-ones word is a codeword.
pub fn golay12() -> Result<TernaryCode, CodeError> {
    // Find a monic degree 5 divisor of x^11 - 1 over F_3.
    let mut divisor: Option<Vec<u8>> = None;
    'outer: for code_id in 0..243u32 {
        let mut g = vec![0u8; 6];
        let mut t = code_id;
        for slot in g.iter_mut().take(5) {
            *slot = (t % 3) as u8;
            t /= 3;
        }
        g[5] = 1;
        if poly_rem_x11m1(&g).iter().all(|&c| c == 0) {
            divisor = Some(g);
            break 'outer;
        }
    }
    let g = divisor.ok_or(CodeError::GolayConstructionInvalid)?;

    // Cyclic [11, 6] code: multiples m(x) g(x) with deg m <= 5.
    let mut base_gens: Vec<Vec<u8>> = Vec::new();
    for j in 0..6 {
        let mut xj = vec![0u8; j + 1];
        xj[j] = 1;
        let mut word = poly_mul_mod3(&xj, &g);
        word.resize(11, 0);
        base_gens.push(word);
    }

    // Extension: append lambda * sum(c) and pick the sign that makes the
    // generators pairwise self-orthogonal.
    let mut extended: Option<Vec<Vec<u8>>> = None;
    'lambda: for lambda in 1..3u8 {
        let cand: Vec<Vec<u8>> = base_gens
            .iter()
            .map(|w| {
                let mut v = w.clone();
                let s: u8 = w.iter().sum::<u8>() % 3;
                v.push((lambda * s) % 3);
                v
            })
            .collect();
        for a in &cand {
            for b in &cand {
                if ternary_dot(a, b) != 0 {
                    continue 'lambda;
                }
            }
        }
        extended = Some(cand);
        break;
    }
    let gens = extended.ok_or(CodeError::GolayConstructionInvalid)?;
    let code = TernaryCode::from_generators(12, gens);
    if code.words.len() != 729 {
        return Err(CodeError::GolayConstructionInvalid);
    }

    // Rescale coordinates with a full-weight word w: c_i -> c_i * w_i sends
    // w to the all-ones word and preserves weights and orthogonality.
    let w = code
        .words
        .iter()
        .find(|w| w.iter().all(|&x| x != 0))
        .ok_or(CodeError::GolayConstructionInvalid)?
        .clone();
    let rescale = |v: &[u8]| -> Vec<u8> { v.iter().zip(&w).map(|(&a, &b)| (a * b) % 3).collect() };
    let gens: Vec<Vec<u8>> = code.gens.iter().map(|v| rescale(v)).collect();
    let code = TernaryCode::from_generators(12, gens);

    let ones = vec![1u8; 12];
    if !code.contains(&ones) || code.words.len() != 729 {
        return Err(CodeError::GolayConstructionInvalid);
    }
    Ok(code)
}

/// The eleven weight-12 codewords with first entry 1 and exactly six entries
/// equal to 1, sorted; the all-ones word is excluded.
pub fn golay_heavy_rows(code: &TernaryCode) -> Result<Vec<Vec<u8>>, CodeError> {
    let rows: Vec<Vec<u8>> = code
        .words()
        .iter()
        .filter(|w| {
            w.iter().all(|&x| x != 0)
                && w[0] == 1
                && w.iter().filter(|&&x| x == 1).count() == 6
        })
        .cloned()
        .collect();
    if rows.len() != 11 {
        return Err(CodeError::GolayConstructionInvalid);
    }
    Ok(rows)
}

/// Twelve orthogonal norm-3 rational rows: half the signed lifts of the
/// eleven heavy rows and of the all-ones word (last). The Gram matrix is
/// checked to be exactly 3 times the identity.
pub fn golay_lambda_basis(code: &TernaryCode) -> Result<Vec<Vec<Rat>>, CodeError> {
    let mut rows = golay_heavy_rows(code)?;
    rows.push(vec![1u8; 12]);
    let basis: Vec<Vec<Rat>> = rows
        .iter()
        .map(|w| {
            w.iter()
                .map(|&x| rat(signed_lift(x), 2))
                .collect::<Vec<_>>()
        })
        .collect();
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate() {
            let dot: Rat = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let expect = if i == j { rat(3, 1) } else { Rat::zero() };
            if dot != expect {
                return Err(CodeError::LambdaBasisInvalid);
            }
        }
    }
    Ok(basis)
}

/// Marked weight enumerator: exponent tuples
/// (X', Y', Z', X'', Y'', Z'') -> multiplicity. Coordinate i contributes to
/// the primed block when `marking[i]` holds. Binary codes use only the X and
/// Y slots.
pub type MarkedEnumerator = BTreeMap<[u8; 6], u64>;

/// Enumerator of a ternary code under a coordinate marking.
pub fn weight_enumerator(code: &TernaryCode, marking: &[bool]) -> MarkedEnumerator {
    assert_eq!(marking.len(), code.length());
    let mut out = MarkedEnumerator::new();
    for w in code.words() {
        let mut key = [0u8; 6];
        for (i, &x) in w.iter().enumerate() {
            let base = if marking[i] { 0 } else { 3 };
            key[base + x as usize] += 1;
        }
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

/// Enumerator of a binary code under a coordinate marking.
pub fn weight_enumerator_binary(code: &BinaryCode, marking: &[bool]) -> MarkedEnumerator {
    assert_eq!(marking.len(), code.length());
    let mut out = MarkedEnumerator::new();
    for &w in code.words() {
        let mut key = [0u8; 6];
        for (i, &primed) in marking.iter().enumerate() {
            let x = ((w >> i) & 1) as usize;
            let base = if primed { 0 } else { 3 };
            key[base + x] += 1;
        }
        *out.entry(key).or_insert(0) += 1;
    }
    out
}
