//! Spectral flow between NS-NS and R-R decompositions.
//!
//! For a marked decomposition with equal central charge c on both sides,
//! flowing half a unit sends z to z q^(1/2) and multiplies each factor by
//! z^(c/6) q^(c/24). On stored series both steps are exact exponent shifts:
//! the substitution adds twice the z-degree to the q-exponent, and the
//! prefactor shifts (q, z) degrees by (c/24, c/6). Flow moves each NS coset
//! by half the marking vector, which is exactly the passage to the R coset
//! of the same label data, so flowed NS-NS groups must reproduce the R-R
//! groups term by term, signs included.

use vosa_core::series::{q_to_grid, JacobiSeries, Q64};

use crate::decomp::{BulkDecomposition, BulkError, SideKind};
use crate::partition::{assemble_cached, kind_label, PartitionVector};
use crate::CheckReport;

/// Image of a factor kind under half-unit spectral flow.
pub fn flow_kind(kind: &SideKind) -> SideKind {
    match kind {
        SideKind::TernaryNS { digits } => SideKind::TernaryR { digits: digits.clone() },
        SideKind::A1Digits { digits, marked: true } => {
            let mut d = digits.clone();
            d[0] = 1 - d[0];
            SideKind::A1Digits { digits: d, marked: true }
        }
        SideKind::DFermion { dm, dlabel, fm, flabel } => SideKind::DFermion {
            dm: *dm,
            dlabel: *dlabel,
            fm: *fm,
            flabel: flabel + 1,
        },
        other => other.clone(),
    }
}

/// One factor under flow: z -> z q^(1/2) then the z^(c/6) q^(c/24) prefactor.
fn flow_series(s: &JacobiSeries, c: i64) -> Result<JacobiSeries, BulkError> {
    Ok(s.u_shift(1).shift(Q64::new(c, 24), c)?)
}

enum FlowOutcome {
    Ok,
    Short,
    Fail(String),
}

fn flow_compare(pv: &PartitionVector, c: i64, trunc: Q64, wanted24: i64) -> Result<FlowOutcome, BulkError> {
    for slot in [0usize, 1] {
        let mut matched = 0usize;
        for t in &pv.entries[slot] {
            let fh = flow_series(&t.holo, c)?;
            let fa = flow_series(&t.anti, c)?;
            if fh.trunc24() < wanted24 || fa.trunc24() < wanted24 {
                return Ok(FlowOutcome::Short);
            }
            let lk = flow_kind(&t.left_kind);
            let rk = flow_kind(&t.right_kind);
            let tag = format!(
                "{} (x) {} -> {} (x) {}",
                kind_label(&t.left_kind),
                kind_label(&t.right_kind),
                kind_label(&lk),
                kind_label(&rk)
            );
            let Some(target) = pv.find_term(slot + 2, &lk, &rk) else {
                return Ok(FlowOutcome::Fail(format!("{tag}: no matching R-R group")));
            };
            if target.count != t.count {
                return Ok(FlowOutcome::Fail(format!(
                    "{tag}: multiplicity {} vs {}",
                    t.count, target.count
                )));
            }
            for (flowed, stored, side) in [(fh, &target.holo, "left"), (fa, &target.anti, "right")] {
                let a = flowed.truncate_to(trunc)?;
                let b = stored.truncate_to(trunc)?;
                if a != b {
                    let diff = a.sub(&b)?;
                    let at = diff
                        .terms()
                        .next()
                        .map(|(&(q, z), _)| format!("q^{q}/24 z^{z}/6"))
                        .unwrap_or_else(|| "truncation".into());
                    return Ok(FlowOutcome::Fail(format!(
                        "{tag}: {side} factors differ first at {at}"
                    )));
                }
            }
            matched += 1;
        }
        if matched != pv.entries[slot + 2].len() {
            return Ok(FlowOutcome::Fail(format!(
                "{} R-R groups in entry {} but {matched} flowed NS-NS groups",
                pv.entries[slot + 2].len(),
                slot + 2
            )));
        }
    }
    Ok(FlowOutcome::Ok)
}

/// Verifies that half-unit spectral flow carries the NS-NS entries onto the
/// R-R entries, group by group and termwise through the given truncation.
pub fn spectral_flow_symmetry_check(
    b: &BulkDecomposition,
    trunc: Q64,
) -> Result<CheckReport, BulkError> {
    if !b.is_super
        || b.summands
            .iter()
            .any(|s| s.left.marking.is_none() || s.right.marking.is_none())
    {
        return Err(BulkError::UnknownExample(format!(
            "spectral flow needs elliptic markings on every summand of {}",
            b.example
        )));
    }
    let c = b.central_charge;
    let wanted24 = q_to_grid(trunc)?;
    let mut t24 = (wanted24 + 48).max(120);
    loop {
        let pv = assemble_cached(b, t24)?;
        match flow_compare(&pv, c, trunc, wanted24)? {
            FlowOutcome::Ok => return Ok(CheckReport::pass(&b.example, "spectral-flow")),
            FlowOutcome::Short if t24 < 1536 => t24 *= 2,
            FlowOutcome::Short => return Err(BulkError::InsufficientTruncation),
            FlowOutcome::Fail(at) => {
                return Ok(CheckReport::fail(&b.example, "spectral-flow", 1.0, at))
            }
        }
    }
}
