//! End-to-end verification of the headline claims of the workbench, one
//! test per claim, each ending in a single PASS or FAIL line:
//!
//! * the extended ternary Golay code and its weight distribution,
//! * binary and ternary glue groups of the D-type cosets,
//! * the exact bigraded decomposition tables of the bulk catalogue,
//! * the central charge 12 partition function, the weight-2 matching
//!   coefficients, and the dual Coxeter scan,
//! * the N=4 Jacobi identity window and the squared supercurrent lemma,
//! * the free-fermion realization of sl2 level 1, with the recorded
//!   failure of the printed N=4 c=6 bracket table,
//! * modular closure of the diagonal partition vectors at sample points,
//! * reality of discriminant S-matrices,
//! * elliptic genera of the marked examples,
//! * spectral flow on characters and on bulk sectors,
//! * the constant ternary frame functions.
//!
//! Exact checks compare cyclotomic coefficients; numeric checks carry the
//! stated tolerances. A test asserts exactly what its line reports.

use std::collections::{BTreeMap, HashSet};

use num_complex::Complex64;
use vosa_algebra::fock::{calibration_search, verify_relations};
use vosa_algebra::n4::{jacobi_check, lemma_g0_square, Gen};
use vosa_bulk::classify::{
    enumerate_solutions, weight2_match, znsns_c12, Family, ScanHit, SimpleType,
};
use vosa_bulk::decomp::{build_bulk, example_catalogue, verify_decomposition};
use vosa_bulk::flow::spectral_flow_symmetry_check;
use vosa_bulk::genus::{elliptic_genus, phi01, ternary_copy_character};
use vosa_bulk::partition::{default_points, modular_check};
use vosa_core::characters::spectral_flow_character_check;
use vosa_core::codes::{d_code_family, golay12, golay_lambda_basis, ternary_dot};
use vosa_core::cyclotomic::{rat, rat_int, CycNum};
use vosa_core::lattices::{
    a1_half_split, d_coset_shift, glue_image, lattice_smatrix, make_lattice, Coset, Lattice,
    LatticeKind,
};
use vosa_core::series::{EvalPoint, Q64};

/// Prints the single verdict line and panics on failure.
fn finish(what: &str, failures: Vec<String>) {
    if failures.is_empty() {
        println!("PASS {what}");
    } else {
        let detail = failures.join("; ");
        println!("FAIL {what}: {detail}");
        panic!("{what}: {detail}");
    }
}

fn q(n: i64) -> Q64 {
    Q64::from_integer(n)
}

#[test]
fn golay_code_words_weights_and_orthogonality() {
    let mut failures = Vec::new();
    let code = golay12().expect("golay12 builds");
    let words = code.words();
    if words.len() != 729 || code.dim() != 6 {
        failures.push(format!("{} words, dimension {}", words.len(), code.dim()));
    }
    // Independent oracle: the listed words really form a linear code.
    let set: HashSet<&[u8]> = words.iter().map(|w| w.as_slice()).collect();
    let closed = words.iter().all(|a| {
        words.iter().all(|b| {
            let sum: Vec<u8> = a.iter().zip(b.iter()).map(|(x, y)| (x + y) % 3).collect();
            set.contains(sum.as_slice())
        })
    });
    if !closed {
        failures.push("word list is not closed under addition".into());
    }
    if !words
        .iter()
        .all(|a| words.iter().all(|b| ternary_dot(a, b) == 0))
    {
        failures.push("a pair of words has nonzero dot product".into());
    }
    let min_wt = words
        .iter()
        .filter(|w| w.iter().any(|&x| x != 0))
        .map(|w| w.iter().filter(|&&x| x != 0).count())
        .min();
    if min_wt != Some(6) {
        failures.push(format!("minimum weight {min_wt:?}"));
    }
    let expect: BTreeMap<usize, usize> = [(0, 1), (6, 264), (9, 440), (12, 24)].into();
    let dist = code.weight_distribution();
    if dist != expect {
        failures.push(format!("weight distribution {dist:?}"));
    }
    finish(
        "golay code: 729 words, linear, self-orthogonal, weights {0:1, 6:264, 9:440, 12:24}",
        failures,
    );
}

#[test]
fn binary_glue_groups_match_d_code_cosets() {
    let mut failures = Vec::new();
    for n in [2usize, 3] {
        let family = d_code_family(n);
        let sub = a1_half_split(n);
        let d2n = make_lattice(LatticeKind::D(2 * n)).expect("D lattice");
        for label in 0..4usize {
            let coset = Coset::with_shift(d2n.clone(), d_coset_shift(2 * n, label));
            let glue = glue_image(&coset, &sub).expect("glue group");
            let words = glue.as_binary_words().expect("binary labels");
            let mut expect: Vec<u64> = family
                .code
                .words()
                .iter()
                .map(|&w| w ^ family.reps[label])
                .collect();
            expect.sort_unstable();
            if words != expect {
                failures.push(format!("D{}+[{label}] labels differ", 2 * n));
            }
        }
    }
    finish(
        "binary glue: D2n + [i] over the split A1 frame equals the d-code coset for n in {2, 3}",
        failures,
    );
}

#[test]
fn ternary_glue_group_recovers_the_golay_code() {
    let mut failures = Vec::new();
    let code = golay12().expect("golay12 builds");
    let basis = golay_lambda_basis(&code).expect("lambda basis");
    let sub = Lattice::from_rows(basis);
    let big = Coset::from_lattice(make_lattice(LatticeKind::DPlus(12)).expect("D12+"));
    let glue = glue_image(&big, &sub).expect("glue group");
    let words = glue.as_ternary_words().expect("ternary labels");
    if words.len() != 729 {
        failures.push(format!("{} labels", words.len()));
    }
    // Glue labels form a group by construction, so order 729 plus
    // self-orthogonality and the weight distribution pin the code up to
    // coordinate equivalence.
    if !words
        .iter()
        .all(|a| words.iter().all(|b| ternary_dot(a, b) == 0))
    {
        failures.push("labels are not self-orthogonal".into());
    }
    let mut dist: BTreeMap<usize, usize> = BTreeMap::new();
    for w in &words {
        *dist.entry(w.iter().filter(|&&x| x != 0).count()).or_insert(0) += 1;
    }
    let expect: BTreeMap<usize, usize> = [(0, 1), (6, 264), (9, 440), (12, 24)].into();
    if dist != expect {
        failures.push(format!("label weight distribution {dist:?}"));
    }
    finish(
        "ternary glue: D12+ over the norm-3 frame carries the golay weight distribution",
        failures,
    );
}

#[test]
fn decomposition_tables_match_with_negative_control() {
    let mut failures = Vec::new();
    let mut tables = 0usize;
    for (family, sizes) in example_catalogue() {
        for n in sizes {
            let b = build_bulk(family, n).expect("catalogue example builds");
            for target in &b.targets {
                let r = verify_decomposition(&b, target, (3, 3)).expect("comparison runs");
                tables += 1;
                if !r.pass {
                    failures.push(format!(
                        "{} {} {} mismatch {:?}",
                        r.example, r.sector, r.target, r.first_mismatch
                    ));
                }
            }
        }
    }
    // Control: dropping a summand must break the comparison.
    let mut broken = build_bulk("diagD", 2).expect("diagD(2) builds");
    broken.summands.remove(0);
    let detected = match verify_decomposition(&broken, &broken.targets[0], (3, 3)) {
        Ok(r) => !r.pass,
        Err(_) => true,
    };
    if !detected {
        failures.push("dropped-summand control went undetected".into());
    }
    finish(
        &format!("decomposition: {tables} sector tables match at bidegree (3, 3); dropped-summand control detected"),
        failures,
    );
}

#[test]
fn c12_partition_function_leading_terms() {
    let mut failures = Vec::new();
    let z = znsns_c12(24, q(1)).expect("partition function");
    for (e, c) in [(-12, 1i64), (0, 24), (12, 276)] {
        let got = z.coeff(e, 0);
        if got != CycNum::from_integer(c) {
            failures.push(format!("coefficient at 24 e = {e} is {got:?}, wanted {c}"));
        }
    }
    finish(
        "partition function: Z(24) = q^(-1/2) + 24 + 276 q^(1/2) + ... exactly",
        failures,
    );
}

#[test]
fn weight2_matching_gives_kappa_44_plus_2d() {
    let mut failures = Vec::new();
    for d in 0i64..=23 {
        let m = weight2_match(d, q(2)).expect("matching solves");
        if m.c_coeff != rat(-1, 12) || m.d_coeff != rat(-d, 12) {
            failures.push(format!("d = {d}: C = {:?}, D = {:?}", m.c_coeff, m.d_coeff));
        }
        if m.kappa != rat_int(44 + 2 * d) {
            failures.push(format!("d = {d}: kappa = {:?}", m.kappa));
        }
    }
    finish(
        "weight-2 matching: C = -1/12, D = -d/12, kappa = 44 + 2d for every d in 0..=23",
        failures,
    );
}

#[test]
fn dual_coxeter_scan_finds_d12_and_e8_only() {
    let mut failures = Vec::new();
    let hits = enumerate_solutions();
    let expect = vec![
        ScanHit {
            d: 0,
            simple_type: SimpleType::new(Family::D, 12).expect("D12 in the table"),
            level: 1,
        },
        ScanHit {
            d: 8,
            simple_type: SimpleType::new(Family::E8, 8).expect("E8 in the table"),
            level: 1,
        },
    ];
    if hits != expect {
        failures.push(format!("scan produced {hits:?}"));
    }
    finish(
        "dual Coxeter scan: exactly (d = 0, D12, level 1) and (d = 8, E8, level 1)",
        failures,
    );
}

#[test]
fn n4_jacobi_identity_closes_on_window_two() {
    let mut failures = Vec::new();
    let r = jacobi_check(2);
    if !r.failures.is_empty() {
        failures.push(format!(
            "{} residual triples, first: {}",
            r.failures.len(),
            r.failures[0]
        ));
    }
    finish(
        &format!(
            "N=4 Jacobi identity: {} triples close after c = 6k ({} raw residuals are multiples of c - 6k)",
            r.triples, r.raw_nonzero
        ),
        failures,
    );
}

#[test]
fn squared_supercurrent_combination_factors() {
    let mut failures = Vec::new();
    let rep = lemma_g0_square();
    if rep.support != vec![Gen::l(0), Gen::j(1, 0)] {
        failures.push(format!("support {:?}", rep.support));
    }
    if rep.magnitudes != (rat_int(2), rat_int(1)) {
        failures.push(format!("magnitudes {:?}", rep.magnitudes));
    }
    if rep.factored_sign == 0 {
        failures.push("square is not proportional to 2 L_0 - J_0".into());
    }
    if !rep.matches_flowed {
        failures.push("square does not match the flowed L_0 - c/24".into());
    }
    finish(
        &format!(
            "squared supercurrent: A^2 = {} * 2 (2 L_0 - J_0), the flow image of 4 (L_0 - c/24)",
            rep.factored_sign
        ),
        failures,
    );
}

#[test]
fn free_fermion_relation_sets_behave_as_recorded() {
    let mut failures = Vec::new();
    let sl2 = verify_relations(7, "sl2-level-1").expect("sl2 set runs");
    if !sl2.all_pass() {
        let bad: Vec<&str> = sl2
            .relations
            .iter()
            .filter(|r| !r.pass)
            .map(|r| r.name.as_str())
            .collect();
        failures.push(format!("sl2-level-1 rows failed: {bad:?}"));
    }
    let n4 = verify_relations(7, "n4-c6").expect("n4 set runs");
    let failing: Vec<&str> = n4
        .relations
        .iter()
        .filter(|r| !r.pass)
        .map(|r| r.name.as_str())
        .collect();
    let recorded = [
        "{G+1, G-2} matches the N=4 target",
        "{G+2, G-1} matches the N=4 target",
        "{G+1_3/2, G-2_-3/2} extended central window",
    ];
    let mut failing_sorted = failing.clone();
    failing_sorted.sort_unstable();
    let mut recorded_sorted = recorded.to_vec();
    recorded_sorted.sort_unstable();
    if failing_sorted != recorded_sorted {
        failures.push(format!("n4-c6 failure set drifted: {failing:?}"));
    }
    let cal = calibration_search(7).expect("calibration runs");
    if cal.consistent {
        failures.push("a single rescaling now reconciles the cross brackets".into());
    }
    if failures.is_empty() {
        // The constructed {G, G} brackets do not close onto the N=4
        // structure constants under any single rescaling; the failure set
        // is pinned so any drift is caught.
        println!(
            "FAIL free-fermion n4-c6 (recorded): sl2-level-1 passes in full; the cross {{G, G}} rows miss the N=4 targets and no calibration reconciles them"
        );
    } else {
        finish("free-fermion relation sets match the recorded behavior", failures);
    }
}

#[test]
fn modular_closure_of_diagonal_examples() {
    let mut failures = Vec::new();
    let points = default_points();
    let mut worst = 0.0f64;
    for (family, n) in [
        ("diagD", 1usize),
        ("diagD", 2),
        ("diagD", 3),
        ("diagF", 1),
        ("diagF", 2),
        ("torusD", 1),
    ] {
        let b = build_bulk(family, n).expect("example builds");
        let reports = modular_check(&b, &points, 1e-6).expect("modular check runs");
        for r in reports {
            worst = worst.max(r.residual);
            if !r.pass {
                failures.push(format!(
                    "{} {} residual {:.3e}",
                    r.example, r.check, r.residual
                ));
            }
        }
    }
    finish(
        &format!("modular closure: S and T residuals below 1e-6 at three sample points (worst {worst:.3e})"),
        failures,
    );
}

#[test]
fn discriminant_smatrix_reality_split() {
    let mut failures = Vec::new();
    for (name, kind, expect_real) in [
        ("A1", LatticeKind::A1(1), true),
        ("D4", LatticeKind::D(4), true),
        ("D12", LatticeKind::D(12), true),
        ("sqrt3Z", LatticeKind::Sqrt3Z(1), false),
    ] {
        let lat = make_lattice(kind).expect("lattice builds");
        let s = lattice_smatrix(&lat).expect("S-matrix");
        let real = s.iter().flatten().all(|e| e == &e.conj());
        if real != expect_real {
            failures.push(format!("{name}: real = {real}, wanted {expect_real}"));
        }
    }
    finish(
        "discriminant S-matrices: real for A1, D4, D12; not real for sqrt(3) Z",
        failures,
    );
}

#[test]
fn elliptic_genera_of_marked_examples() {
    let mut failures = Vec::new();
    let reference = phi01(q(3))
        .expect("weak Jacobi form")
        .scalar_rat(&rat_int(2));

    let golay = build_bulk("golayD12", 6).expect("golayD12 builds");
    let (genus, verdict) = elliptic_genus(&golay, q(5)).expect("genus computes");
    if !verdict.constant_at_z1 || verdict.z1_value != "24" {
        failures.push(format!(
            "golayD12 value at z = 1 is {} (constant: {})",
            verdict.z1_value, verdict.constant_at_z1
        ));
    }
    if !verdict.elliptic_ok {
        failures.push("golayD12 index-1 shift identity fails".into());
    }
    if genus.truncate_to(q(3)).expect("truncates") != reference {
        failures.push("golayD12 genus differs from 2 phi_{0,1}".into());
    }

    let torus = build_bulk("torusD", 1).expect("torusD builds");
    let (torus_genus, _) = elliptic_genus(&torus, q(4)).expect("genus computes");
    if !torus_genus.terms().all(|(_, c)| c.is_zero()) {
        failures.push("torusD genus is not identically zero".into());
    }

    let tetra = build_bulk("tetrahedralK3", 3).expect("tetrahedralK3 builds");
    let (tetra_genus, tetra_verdict) = elliptic_genus(&tetra, q(3)).expect("genus computes");
    if !tetra_verdict.constant_at_z1 || tetra_verdict.z1_value != "24" {
        failures.push("tetrahedralK3 value at z = 1 is not the constant 24".into());
    }
    if tetra_genus.truncate_to(q(3)).expect("truncates") != reference {
        failures.push("tetrahedralK3 genus differs from 2 phi_{0,1}".into());
    }

    finish(
        "elliptic genera: golayD12 and tetrahedralK3 give 2 phi_{0,1} with value 24, torusD vanishes",
        failures,
    );
}

#[test]
fn spectral_flow_on_characters_and_sectors() {
    let mut failures = Vec::new();
    for l in -2i64..=2 {
        let ok = spectral_flow_character_check(l, q(3)).expect("character flow runs");
        if !ok {
            failures.push(format!("level-1 character flow fails at l = {l}"));
        }
    }
    for (family, n) in [("tetrahedralK3", 3usize), ("golayD12", 6)] {
        let b = build_bulk(family, n).expect("example builds");
        let r = spectral_flow_symmetry_check(&b, q(3)).expect("sector flow runs");
        if !r.pass {
            failures.push(format!(
                "{family} sector interchange: {:?}",
                r.first_mismatch
            ));
        }
    }
    finish(
        "spectral flow: A1 level-1 characters for l in -2..=2 and NS/R interchange on marked examples",
        failures,
    );
}

#[test]
fn ternary_frame_functions_are_constant() {
    let mut failures = Vec::new();
    let f3 = ternary_copy_character(1, true, q(6)).expect("frame character");
    if !f3.specialize_z(0).terms().all(|(_, c)| c.is_zero()) {
        failures.push("middle frame function does not vanish at z = 0".into());
    }
    let expect = Complex64::from_polar(1.0, std::f64::consts::PI / 6.0);
    let taus = [
        Complex64::new(0.0, 1.0),
        Complex64::new(0.5, 0.75f64.sqrt()),
        Complex64::new(0.3, 0.9),
    ];
    for (t, sign) in [(0u8, 1.0f64), (2, -1.0)] {
        let f = ternary_copy_character(t, true, q(8)).expect("frame character");
        let want = Complex64::new(expect.re, sign * expect.im);
        for tau in taus {
            let v = f
                .eval_numeric(&EvalPoint::tau_only(tau), false, 1e-9)
                .expect("evaluates")
                .value;
            if (v - want).norm() >= 1e-6 {
                failures.push(format!("t = {t} at tau = {tau}: {v} vs {want}"));
            }
        }
    }
    finish(
        "ternary frame functions: f_3(0, .) = 0 and f_{+-1}(0, .) = exp(+-i pi/6) at three points",
        failures,
    );
}

#[test]
fn cli_classify_reports_clean_json() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_vosa"))
        .args(["classify", "--format", "json"])
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "exit {:?}", out.status.code());
    let v: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is a JSON object");
    let checks = v["checks"].as_array().expect("checks array");
    assert!(!checks.is_empty());
    assert!(checks.iter().all(|c| c["pass"] == true), "a check failed");
}

#[test]
fn cli_rejects_bad_usage_with_exit_two() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_vosa"))
        .arg("no-such-subcommand")
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}
