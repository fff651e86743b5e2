//! Command line front end for the workbench. Every verification family is
//! a subcommand producing a deterministic, sorted stream of check reports
//! in JSON or text. The exit code is 0 when every report passes, 1 when
//! any check fails or a computation aborts, and 2 on usage errors.

use std::fmt;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use vosa_algebra::fock::{calibration_search, verify_relations};
use vosa_algebra::n4::{jacobi_check, lemma_g0_square};
use vosa_bulk::classify::{enumerate_solutions, weight2_match, znsns_c12};
use vosa_bulk::decomp::{build_bulk, example_catalogue, verify_decomposition, DecompReport};
use vosa_bulk::flow::spectral_flow_symmetry_check;
use vosa_bulk::genus::{elliptic_genus, phi01};
use vosa_bulk::partition::{
    bold_relations_hold, default_points, hypothesis_check, lattice_s_unitary, modular_check,
    positivity_check, refined_point,
};
use vosa_bulk::{sort_reports, CheckReport};
use vosa_core::characters::{
    fermion_character, lattice_vosa_character, spectral_flow_character_check, FermionSector,
};
use vosa_core::codes::{d_code_family, golay12, golay_lambda_basis, ternary_dot};
use vosa_core::cyclotomic::{rat, rat_int, CycNum};
use vosa_core::lattices::{
    a1_half_split, d_coset_shift, glue_image, lattice_smatrix, make_lattice, theta, Coset, Lattice,
    LatticeKind, SignCharacter,
};
use vosa_core::series::{EvalPoint, Q64};

/// Families whose summands carry an elliptic marking on both sides.
const MARKED_FAMILIES: [&str; 4] = ["torusD", "tetrahedralK3", "golayD12", "gepner16"];

/// Examples small enough for the positivity sweep at its fixed truncation.
const POSITIVITY_EXAMPLES: [(&str, usize); 8] = [
    ("diagD", 1),
    ("diagD", 2),
    ("diagA1", 1),
    ("diagA1", 2),
    ("diagVL", 2),
    ("diagF", 1),
    ("diagF", 2),
    ("diagF", 3),
];

#[derive(Parser)]
#[command(
    name = "vosa",
    version,
    about = "Exact-arithmetic workbench for self-dual vertex operator superalgebras"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Character expansions and exact bulk decomposition tables.
    Characters(ExampleCmd),
    /// Theta series coefficients and discriminant S-matrix reality.
    Theta(CommonCmd),
    /// Binary and ternary glue groups, including the Golay code facts.
    Glue(CommonCmd),
    /// The central charge 12 scan: partition function, weight-2 matching,
    /// dual Coxeter enumeration.
    Classify(CommonCmd),
    /// Modular closure of the four-component partition vectors.
    Modular(ExampleCmd),
    /// Elliptic genera of the marked examples.
    Genus(ExampleCmd),
    /// Spectral flow at the character level and on bulk sectors.
    Flow(ExampleCmd),
    /// Mode-algebra sweeps for the small N=4 superconformal algebra.
    N4(N4Cmd),
    /// Free-fermion realization of sl2 level 1 and the c=6 algebra.
    Freefield(CommonCmd),
    /// Every check family in one run.
    VerifyAll(ExampleCmd),
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct CommonOpts {
    /// Truncation order in q, as an integer or a fraction like 13/2.
    /// Falls back to the VOSA_ORDER environment variable, then to 6.
    #[arg(long)]
    order: Option<String>,
    /// Numeric tolerance for residual checks.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Evaluation point "re,im" in the upper half-plane (Im >= 0.5);
    /// repeat the flag for several points.
    #[arg(long = "points", value_name = "RE,IM")]
    points: Vec<String>,
    /// Report format.
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Run independent checks concurrently; output order is unaffected.
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct CommonCmd {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct ExampleCmd {
    /// Restrict to one example family, e.g. "diagD" or "golayD12",
    /// optionally with a size as "diagD:2".
    #[arg(long)]
    example: Option<String>,
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Clone, Copy, ValueEnum)]
enum N4Action {
    /// Graded Jacobi identity sweep over a mode window.
    Jacobi,
    /// The square of the distinguished odd mode combination.
    Lemma,
    /// Both sweeps.
    All,
}

#[derive(Args)]
struct N4Cmd {
    /// Which sweep to run.
    #[arg(value_enum, default_value_t = N4Action::All)]
    action: N4Action,
    /// Mode window for the Jacobi sweep.
    #[arg(long, default_value_t = 2)]
    window: i64,
    #[command(flatten)]
    common: CommonOpts,
}

/// A malformed flag value; reported on stderr with exit code 2.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Resolved run configuration shared by all subcommands.
struct RunConfig {
    trunc: Q64,
    tol: f64,
    points: Vec<EvalPoint>,
    format: Format,
    parallel: bool,
}

fn parse_order(text: &str) -> anyhow::Result<Q64> {
    let parts: Vec<&str> = text.split('/').collect();
    let parsed = match parts.as_slice() {
        [a] => a.parse::<i64>().ok().map(Q64::from_integer),
        [a, b] => match (a.parse::<i64>(), b.parse::<i64>()) {
            (Ok(n), Ok(d)) if d != 0 => Some(Q64::new(n, d)),
            _ => None,
        },
        _ => None,
    };
    match parsed {
        Some(q) if q > Q64::from_integer(0) => Ok(q),
        _ => Err(usage(format!(
            "order must be a positive rational like 6 or 13/2, got {text:?}"
        ))),
    }
}

impl RunConfig {
    fn from_opts(opts: &CommonOpts) -> anyhow::Result<RunConfig> {
        let trunc = match &opts.order {
            Some(text) => parse_order(text)?,
            None => match std::env::var("VOSA_ORDER") {
                Ok(text) => parse_order(&text)?,
                Err(_) => Q64::from_integer(6),
            },
        };
        if !(opts.tol > 0.0) {
            return Err(usage("tol must be positive"));
        }
        let mut points = Vec::new();
        for text in &opts.points {
            let parts: Vec<&str> = text.split(',').collect();
            let pair = match parts.as_slice() {
                [re, im] => match (re.trim().parse::<f64>(), im.trim().parse::<f64>()) {
                    (Ok(re), Ok(im)) => Some((re, im)),
                    _ => None,
                },
                _ => None,
            };
            let (re, im) =
                pair.ok_or_else(|| usage(format!("point must be \"re,im\", got {text:?}")))?;
            if im < 0.5 {
                return Err(usage(format!(
                    "point {text:?} is below the Im >= 0.5 floor"
                )));
            }
            points.push(EvalPoint::tau_only(Complex64::new(re, im)));
        }
        if points.is_empty() {
            points = default_points();
        }
        Ok(RunConfig {
            trunc,
            tol: opts.tol,
            points,
            format: opts.format,
            parallel: opts.parallel,
        })
    }

    fn capped(&self, max: i64) -> Q64 {
        self.trunc.min(Q64::from_integer(max))
    }
}

/// Check list plus extra payload fields merged into the JSON object.
#[derive(Default)]
struct Output {
    checks: Vec<CheckReport>,
    extras: serde_json::Map<String, serde_json::Value>,
}

impl Output {
    fn push(&mut self, report: CheckReport) {
        self.checks.push(report);
    }

    fn merge(&mut self, other: Output) {
        self.checks.extend(other.checks);
        for (k, v) in other.extras {
            self.extras.insert(k, v);
        }
    }
}

fn exact(example: &str, check: &str, ok: bool, detail: impl FnOnce() -> String) -> CheckReport {
    if ok {
        CheckReport::pass(example, check)
    } else {
        CheckReport::fail(example, check, 1.0, detail())
    }
}

/// Runs per-item closures, optionally in parallel; result order follows
/// the input order either way.
fn run_items<T, F>(items: Vec<T>, parallel: bool, f: F) -> anyhow::Result<Vec<Vec<CheckReport>>>
where
    T: Send + Sync,
    F: Fn(&T) -> anyhow::Result<Vec<CheckReport>> + Sync + Send,
{
    if parallel {
        items.par_iter().map(&f).collect()
    } else {
        items.iter().map(&f).collect()
    }
}

/// Flattens the example catalogue and applies the --example filter.
fn catalogue_filtered(filter: Option<&str>) -> anyhow::Result<Vec<(String, usize)>> {
    let mut flat = Vec::new();
    for (family, sizes) in example_catalogue() {
        for n in sizes {
            flat.push((family.to_string(), n));
        }
    }
    let Some(pat) = filter else {
        return Ok(flat);
    };
    let (family, size) = match pat.split_once(':') {
        Some((f, s)) => {
            let n: usize = s
                .parse()
                .map_err(|_| usage(format!("bad example size in {pat:?}")))?;
            (f, Some(n))
        }
        None => (pat, None),
    };
    let keep: Vec<(String, usize)> = flat
        .into_iter()
        .filter(|(f, n)| f == family && size.map_or(true, |s| s == *n))
        .collect();
    if keep.is_empty() {
        let names: Vec<&str> = example_catalogue().iter().map(|(f, _)| *f).collect();
        return Err(usage(format!(
            "unknown example {pat:?}; families: {}",
            names.join(", ")
        )));
    }
    Ok(keep)
}

fn marked_only(list: Vec<(String, usize)>) -> Vec<(String, usize)> {
    list.into_iter()
        .filter(|(f, _)| MARKED_FAMILIES.contains(&f.as_str()))
        .collect()
}

fn decomp_to_check(r: &DecompReport) -> CheckReport {
    let check = format!("decomposition-{}-{}", r.sector, r.target);
    match &r.first_mismatch {
        None => CheckReport::pass(&r.example, &check),
        Some(m) => CheckReport::fail(
            &r.example,
            &check,
            1.0,
            format!(
                "bigrade ({}/24, {}/24): expected {}, found {}",
                m.qe24_left, m.qe24_right, m.expected, m.found
            ),
        ),
    }
}

/// Character expansions pinned to published coefficients, then the exact
/// summand-by-summand decomposition tables.
fn run_characters(cfg: &RunConfig, filter: Option<&str>) -> anyhow::Result<Output> {
    let mut out = Output::default();

    let f24 = fermion_character(24, FermionSector::NS, false, cfg.trunc)?;
    let want = [(-12, 1), (0, 24), (12, 276), (24, 2048)];
    let ok = want
        .iter()
        .all(|&(e, c)| f24.coeff(e, 0) == CycNum::from_integer(c));
    out.push(exact("F(24)", "ns-expansion", ok, || {
        "expected q^(-1/2) + 24 + 276 q^(1/2) + 2048 q".into()
    }));

    let e8 = lattice_vosa_character(
        &Coset::from_lattice(make_lattice(LatticeKind::E8)?),
        None,
        &SignCharacter::Trivial,
        cfg.capped(4),
    )?;
    let ok = e8.coeff(-8, 0) == CycNum::one() && e8.coeff(16, 0) == CycNum::from_integer(248);
    out.push(exact("V[E8]", "character-248", ok, || {
        "expected q^(-1/3) (1 + 248 q + ...)".into()
    }));

    // Rank 12 enumeration is kept to a low order; the identity is already
    // decisive at the 276 q^(1/2) coefficient.
    let small = cfg.capped(2);
    let d12 = lattice_vosa_character(
        &Coset::from_lattice(make_lattice(LatticeKind::DPlus(12))?),
        None,
        &SignCharacter::Trivial,
        small,
    )?;
    let z0 = znsns_c12(0, small)?;
    out.push(exact("V[D12+]", "matches-znsns-d0", d12 == z0, || {
        "lattice character differs from the d = 0 partition function".into()
    }));

    let deg = cfg.capped(3).floor().to_integer().max(1);
    let items = catalogue_filtered(filter)?;
    let per_item = run_items(items, cfg.parallel, |(family, n)| {
        let b = build_bulk(family, *n)?;
        let mut checks = Vec::new();
        for target in &b.targets {
            let r = verify_decomposition(&b, target, (deg, deg))?;
            checks.push(decomp_to_check(&r));
        }
        Ok(checks)
    })?;
    out.checks.extend(per_item.into_iter().flatten());
    Ok(out)
}

/// Theta coefficients of the standard lattices and the reality split of
/// the discriminant S-matrices.
fn run_theta(cfg: &RunConfig) -> anyhow::Result<Output> {
    let mut out = Output::default();

    let e8 = theta(
        &Coset::from_lattice(make_lattice(LatticeKind::E8)?),
        None,
        &SignCharacter::Trivial,
        cfg.capped(4),
        Q64::from_integer(1),
    )?;
    let ok = e8.coeff(24, 0) == CycNum::from_integer(240)
        && e8.coeff(48, 0) == CycNum::from_integer(2160);
    out.push(exact("E8", "theta-240-2160", ok, || {
        "expected 1 + 240 q + 2160 q^2 + ...".into()
    }));

    let d4 = theta(
        &Coset::from_lattice(make_lattice(LatticeKind::D(4))?),
        None,
        &SignCharacter::NormParity,
        cfg.capped(4),
        Q64::new(1, 2),
    )?;
    let want = [(0, 1), (12, -24), (24, 24), (36, -96)];
    let ok = want
        .iter()
        .all(|&(e, c)| d4.coeff(e, 0) == CycNum::from_integer(c));
    out.push(exact("D4", "signed-half-theta", ok, || {
        "expected 1 - 24 q^(1/2) + 24 q - 96 q^(3/2)".into()
    }));

    let z1 = make_lattice(LatticeKind::Z(1))?;
    let z2 = z1.direct_sum(&z1);
    let t1 = theta(
        &Coset::from_lattice(z1),
        None,
        &SignCharacter::Trivial,
        cfg.capped(6),
        Q64::from_integer(1),
    )?;
    let t2 = theta(
        &Coset::from_lattice(z2),
        None,
        &SignCharacter::Trivial,
        cfg.capped(6),
        Q64::from_integer(1),
    )?;
    out.push(exact(
        "Z+Z",
        "direct-sum-factorization",
        t2 == t1.mul(&t1)?,
        || "theta of the direct sum is not the product".into(),
    ));

    for (name, kind, expect_real) in [
        ("A1", LatticeKind::A1(1), true),
        ("D4", LatticeKind::D(4), true),
        ("D12", LatticeKind::D(12), true),
        ("sqrt3Z", LatticeKind::Sqrt3Z(1), false),
    ] {
        let lat = make_lattice(kind)?;
        let s = lattice_smatrix(&lat)?;
        let real = s.iter().flatten().all(|e| e == &e.conj());
        out.push(exact(name, "smatrix-reality", real == expect_real, || {
            format!("expected real = {expect_real}, computed real = {real}")
        }));
        out.push(exact(name, "smatrix-unitary", lattice_s_unitary(&s), || {
            "S S*^t differs from the identity".into()
        }));
    }
    Ok(out)
}

/// Golay code facts and the two glue-group computations.
fn run_glue(cfg: &RunConfig) -> anyhow::Result<Output> {
    let mut out = Output::default();
    let code = golay12()?;

    out.push(exact(
        "golay12",
        "dimension-6",
        code.dim() == 6 && code.words().len() == 729,
        || format!("dim {} with {} words", code.dim(), code.words().len()),
    ));
    let self_orth = code
        .words()
        .iter()
        .all(|a| code.words().iter().all(|b| ternary_dot(a, b) == 0));
    out.push(exact("golay12", "self-orthogonal", self_orth, || {
        "a pair of codewords has nonzero dot product".into()
    }));
    let min_wt = code
        .words()
        .iter()
        .filter(|w| w.iter().any(|&x| x != 0))
        .map(|w| w.iter().filter(|&&x| x != 0).count())
        .min();
    out.push(exact("golay12", "min-weight-6", min_wt == Some(6), || {
        format!("minimum weight {min_wt:?}")
    }));
    let dist = code.weight_distribution();
    let expect = [(0usize, 1usize), (6, 264), (9, 440), (12, 24)]
        .into_iter()
        .collect();
    out.push(exact("golay12", "weight-distribution", dist == expect, || {
        format!("distribution {dist:?}")
    }));

    // D_{2n} + [i] over the half-split A1 frame reproduces the mirrored
    // binary code coset for every label.
    for n in [2usize, 3] {
        let family = d_code_family(n);
        let sub = a1_half_split(n);
        let d2n = make_lattice(LatticeKind::D(2 * n))?;
        for label in 0..4usize {
            let coset = Coset::with_shift(d2n.clone(), d_coset_shift(2 * n, label));
            let glue = glue_image(&coset, &sub)?;
            let words = glue
                .as_binary_words()
                .ok_or_else(|| anyhow::anyhow!("glue labels are not binary"))?;
            let mut expect: Vec<u64> = family
                .code
                .words()
                .iter()
                .map(|&w| w ^ family.reps[label])
                .collect();
            expect.sort_unstable();
            out.push(exact(
                &format!("D{}+[{label}]", 2 * n),
                "glue-binary-coset",
                words == expect,
                || "glue labels differ from the code coset".into(),
            ));
        }
    }

    // D12+ over the lambda frame: 729 labels forming a self-orthogonal
    // dimension-6 ternary code of minimum weight 6, which pins the ternary
    // Golay code up to coordinate equivalence.
    let basis = golay_lambda_basis(&code)?;
    let sub = Lattice::from_rows(basis);
    let big = Coset::from_lattice(make_lattice(LatticeKind::DPlus(12))?);
    let glue = glue_image(&big, &sub)?;
    let words = glue
        .as_ternary_words()
        .ok_or_else(|| anyhow::anyhow!("glue labels are not ternary"))?;
    let mut dist = std::collections::BTreeMap::new();
    for w in &words {
        *dist
            .entry(w.iter().filter(|&&x| x != 0).count())
            .or_insert(0usize) += 1;
    }
    let expect: std::collections::BTreeMap<usize, usize> =
        [(0, 1), (6, 264), (9, 440), (12, 24)].into_iter().collect();
    let orth = words
        .iter()
        .all(|a| words.iter().all(|b| ternary_dot(a, b) == 0));
    out.push(exact(
        "D12+",
        "glue-ternary-golay",
        words.len() == 729 && dist == expect && orth,
        || format!("labels {} distribution {dist:?}", words.len()),
    ));

    let _ = cfg;
    Ok(out)
}

/// Partition function, weight-2 matching, and the dual Coxeter scan.
fn run_classify(cfg: &RunConfig) -> anyhow::Result<Output> {
    let mut out = Output::default();

    let z24 = znsns_c12(24, cfg.trunc)?;
    let ok = z24.coeff(-12, 0) == CycNum::one()
        && z24.coeff(0, 0) == CycNum::from_integer(24)
        && z24.coeff(12, 0) == CycNum::from_integer(276);
    out.push(exact("c12", "znsns-24-expansion", ok, || {
        "expected q^(-1/2) + 24 + 276 q^(1/2)".into()
    }));

    // The matching output is truncation-independent beyond 3/2.
    let trunc = cfg.capped(2);
    let mut bad = None;
    for d in 0..24i64 {
        let m = weight2_match(d, trunc)?;
        if m.c_coeff != rat(-1, 12) || m.d_coeff != rat(-d, 12) || m.kappa != rat_int(44 + 2 * d) {
            bad = Some(format!(
                "d = {d}: C = {}, D = {}, kappa = {}",
                m.c_coeff, m.d_coeff, m.kappa
            ));
            break;
        }
    }
    out.push(exact("c12", "weight2-kappa-44-2d", bad.is_none(), || {
        bad.clone().unwrap_or_default()
    }));

    let hits = enumerate_solutions();
    let ok = hits.len() == 2
        && hits[0].d == 0
        && hits[0].simple_type.to_string() == "D12"
        && hits[0].level == 1
        && hits[1].d == 8
        && hits[1].simple_type.to_string() == "E8"
        && hits[1].level == 1;
    out.push(exact("c12", "scan-hits", ok, || format!("hits {hits:?}")));
    out.extras
        .insert("hits".into(), serde_json::to_value(&hits)?);
    Ok(out)
}

fn points_for(cfg: &RunConfig, family: &str) -> Vec<EvalPoint> {
    let mut points = cfg.points.clone();
    if MARKED_FAMILIES.contains(&family) {
        points.push(refined_point());
    }
    points
}

/// S- and T-closure of the partition vectors over the catalogue.
fn run_modular(cfg: &RunConfig, filter: Option<&str>) -> anyhow::Result<Output> {
    let mut out = Output::default();
    let items = catalogue_filtered(filter)?;
    let per_item = run_items(items, cfg.parallel, |(family, n)| {
        let b = build_bulk(family, *n)?;
        Ok(modular_check(&b, &points_for(cfg, family), cfg.tol)?)
    })?;
    out.checks.extend(per_item.into_iter().flatten());
    Ok(out)
}

/// Elliptic genera of the marked examples: holomorphicity, the value 24
/// (or 0) at u = 0, the shift identity, and the K3 comparison.
fn run_genus(cfg: &RunConfig, filter: Option<&str>) -> anyhow::Result<Output> {
    let mut out = Output::default();
    let items = marked_only(catalogue_filtered(filter)?);
    if items.is_empty() {
        return Err(usage(format!(
            "genus needs a marked example; families: {}",
            MARKED_FAMILIES.join(", ")
        )));
    }
    let reference = phi01(cfg.capped(3))?.scalar_rat(&rat_int(2));
    let detailed = filter.is_some();
    let results: Vec<(Vec<CheckReport>, Option<(String, serde_json::Value)>)> = {
        let work = |(family, n): &(String, usize)| {
            let mut checks = Vec::new();
            let b = build_bulk(family, *n)?;
            let wanted = if family == "torusD" { "0" } else { "24" };
            let (genus, verdict) = match elliptic_genus(&b, cfg.trunc) {
                Ok(pair) => pair,
                Err(e @ vosa_bulk::decomp::BulkError::NotHolomorphic { .. }) => {
                    checks.push(CheckReport::fail(
                        &b.example,
                        "genus-holomorphic",
                        1.0,
                        e.to_string(),
                    ));
                    return Ok((checks, None));
                }
                Err(e) => return Err(e.into()),
            };
            checks.push(CheckReport::pass(&b.example, "genus-holomorphic"));
            checks.push(exact(
                &b.example,
                "genus-u0-constant",
                verdict.constant_at_z1 && verdict.z1_value == wanted,
                || format!("u = 0 value {}", verdict.z1_value),
            ));
            checks.push(exact(
                &b.example,
                "genus-elliptic-shift",
                verdict.elliptic_ok,
                || "index-1 coefficient shift identity fails".into(),
            ));
            let cmp = cfg.capped(3);
            let matches = if family == "torusD" {
                genus.terms().all(|(_, c)| c.is_zero())
            } else {
                genus.truncate_to(cmp)? == reference.clone().truncate_to(cmp)?
            };
            let check = if family == "torusD" {
                "genus-vanishes"
            } else {
                "genus-k3-match"
            };
            checks.push(exact(&b.example, check, matches, || {
                "genus differs from the reference series".into()
            }));
            let payload = if detailed {
                let rows: Vec<serde_json::Value> = genus
                    .terms()
                    .map(|((qe24, ze), c)| {
                        json!({
                            "qe24": qe24,
                            "ze6": ze,
                            "coeff": c.as_rational().map(|r| r.to_string()),
                        })
                    })
                    .collect();
                Some((format!("genus-{}", b.example), serde_json::Value::from(rows)))
            } else {
                None
            };
            Ok((checks, payload))
        };
        if cfg.parallel {
            items.par_iter().map(work).collect::<anyhow::Result<_>>()?
        } else {
            items.iter().map(work).collect::<anyhow::Result<_>>()?
        }
    };
    for (checks, payload) in results {
        out.checks.extend(checks);
        if let Some((key, value)) = payload {
            out.extras.insert(key, value);
        }
    }
    Ok(out)
}

/// Character-level spectral flow and the NS/R sector interchange.
fn run_flow(cfg: &RunConfig, filter: Option<&str>) -> anyhow::Result<Output> {
    let mut out = Output::default();
    if filter.is_none() {
        for l in -2..=2i64 {
            let ok = spectral_flow_character_check(l, cfg.capped(3))?;
            out.push(exact(
                "A1-level1",
                &format!("character-flow-l{l}"),
                ok,
                || "flowed character mismatch".into(),
            ));
        }
    }
    let items = marked_only(catalogue_filtered(filter)?);
    let per_item = run_items(items, cfg.parallel, |(family, n)| {
        let b = build_bulk(family, *n)?;
        Ok(vec![spectral_flow_symmetry_check(&b, cfg.capped(3))?])
    })?;
    out.checks.extend(per_item.into_iter().flatten());
    Ok(out)
}

/// Jacobi identity sweep and the odd-square mode computation.
fn run_n4(cfg: &RunConfig, action: N4Action, window: i64) -> anyhow::Result<Output> {
    let mut out = Output::default();
    if matches!(action, N4Action::Jacobi | N4Action::All) {
        let rep = jacobi_check(window);
        let check = format!("jacobi-window-{window}");
        out.push(if rep.failures.is_empty() {
            CheckReport::pass("n4", &check)
        } else {
            CheckReport::fail(
                "n4",
                &check,
                rep.failures.len() as f64,
                rep.failures[0].clone(),
            )
        });
        out.extras.insert(
            "jacobi".into(),
            json!({"triples": rep.triples, "raw_nonzero": rep.raw_nonzero}),
        );
    }
    if matches!(action, N4Action::Lemma | N4Action::All) {
        let rep = lemma_g0_square();
        let ok = rep.magnitudes == (rat_int(2), rat_int(1)) && rep.factored_sign != 0;
        out.push(exact("n4", "g0-square-support", ok, || {
            format!("magnitudes {:?}", rep.magnitudes)
        }));
        out.push(exact(
            "n4",
            "g0-square-flow-origin",
            rep.matches_flowed,
            || "square does not match the flowed Virasoro origin".into(),
        ));
        out.extras
            .insert("g0_square_sign".into(), json!(rep.factored_sign));
    }
    let _ = cfg;
    Ok(out)
}

/// Free-fermion mode matrices: relation sweeps and the calibration scan.
fn run_freefield(cfg: &RunConfig) -> anyhow::Result<Output> {
    let mut out = Output::default();
    for set in ["sl2-level-1", "n4-c6"] {
        let rep = verify_relations(7, set)?;
        let example = format!("freefield-{set}");
        for rel in rep.relations {
            out.push(if rel.pass {
                CheckReport::pass(&example, &rel.name)
            } else {
                CheckReport::fail(&example, &rel.name, 1.0, rel.detail)
            });
        }
    }
    let cal = calibration_search(7)?;
    let detail: Vec<String> = cal
        .pairs
        .iter()
        .map(|(name, ratio)| match ratio {
            Some(r) => format!("{name}: ratio {r}"),
            None => format!("{name}: not proportional"),
        })
        .collect();
    out.push(exact(
        "freefield-n4-c6",
        "calibration",
        cal.consistent,
        || detail.join("; "),
    ));
    let _ = cfg;
    Ok(out)
}

/// Everything, plus the positivity sweep, the hypothesis verdicts, and the
/// exact bold S/T matrix relations.
fn run_verify_all(cfg: &RunConfig, filter: Option<&str>) -> anyhow::Result<Output> {
    let mut out = Output::default();
    out.merge(run_characters(cfg, filter)?);
    out.merge(run_theta(cfg)?);
    out.merge(run_glue(cfg)?);
    out.merge(run_classify(cfg)?);
    out.merge(run_modular(cfg, filter)?);
    out.merge(run_genus(cfg, None)?);
    out.merge(run_flow(cfg, filter)?);
    out.merge(run_n4(cfg, N4Action::All, 2)?);
    out.merge(run_freefield(cfg)?);

    out.push(exact(
        "bold-matrices",
        "st-relations",
        bold_relations_hold(),
        || "S^2 = T^2 = (ST)^3 = 1 fails".into(),
    ));

    let positivity: Vec<(String, usize)> = POSITIVITY_EXAMPLES
        .iter()
        .map(|(f, n)| (f.to_string(), *n))
        .collect();
    let per_item = run_items(positivity, cfg.parallel, |(family, n)| {
        let b = build_bulk(family, *n)?;
        Ok(vec![positivity_check(&b)?])
    })?;
    out.checks.extend(per_item.into_iter().flatten());

    let items = catalogue_filtered(None)?;
    let mut verdicts = Vec::new();
    for (family, n) in items {
        let b = build_bulk(&family, n)?;
        let rep = hypothesis_check(&b)?;
        out.push(exact(
            &b.example,
            "hypothesis-verdict",
            (rep.verdict == "quasi") == b.quasi,
            || format!("verdict {} for quasi = {}", rep.verdict, b.quasi),
        ));
        verdicts.push(json!({
            "example": rep.example,
            "verdict": rep.verdict,
            "failures": rep.failures,
            "lattice_s_real": rep.lattice_s_real,
        }));
    }
    out.extras
        .insert("hypothesis".into(), serde_json::Value::from(verdicts));
    Ok(out)
}

/// Prints one line, ignoring a closed stdout (e.g. a cut pipe).
fn say(line: impl fmt::Display) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{line}");
}

fn emit(mut out: Output, format: Format) -> ExitCode {
    sort_reports(&mut out.checks);
    let failed = out.checks.iter().filter(|c| !c.pass).count();
    match format {
        Format::Json => {
            let mut root = serde_json::Map::new();
            root.insert(
                "checks".into(),
                serde_json::to_value(&out.checks).expect("report serialization"),
            );
            for (k, v) in out.extras {
                root.insert(k, v);
            }
            say(
                serde_json::to_string_pretty(&serde_json::Value::Object(root))
                    .expect("report serialization"),
            );
        }
        Format::Text => {
            for c in &out.checks {
                let status = if c.pass { "PASS" } else { "FAIL" };
                let mut line = format!("{status} {} {} residual={:.3e}", c.example, c.check, c.residual);
                if let Some(m) = &c.first_mismatch {
                    line.push_str(&format!(" at {m}"));
                }
                say(line);
            }
            for (k, v) in &out.extras {
                say(format_args!("# {k} {v}"));
            }
            say(format_args!(
                "summary: {} checks, {} failed",
                out.checks.len(),
                failed
            ));
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let (opts, outcome): (&CommonOpts, _) = match &cli.command {
        Command::Characters(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_characters(&cfg, cmd.example.as_deref())?, cfg.format))
        }
        Command::Theta(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_theta(&cfg)?, cfg.format))
        }
        Command::Glue(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_glue(&cfg)?, cfg.format))
        }
        Command::Classify(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_classify(&cfg)?, cfg.format))
        }
        Command::Modular(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_modular(&cfg, cmd.example.as_deref())?, cfg.format))
        }
        Command::Genus(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_genus(&cfg, cmd.example.as_deref())?, cfg.format))
        }
        Command::Flow(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_flow(&cfg, cmd.example.as_deref())?, cfg.format))
        }
        Command::N4(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_n4(&cfg, cmd.action, cmd.window)?, cfg.format))
        }
        Command::Freefield(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_freefield(&cfg)?, cfg.format))
        }
        Command::VerifyAll(cmd) => {
            let cfg = RunConfig::from_opts(&cmd.common)?;
            (&cmd.common, emit(run_verify_all(&cfg, cmd.example.as_deref())?, cfg.format))
        }
    };
    let _ = opts;
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            if e.is::<UsageError>() {
                eprintln!("usage error: {e}");
                ExitCode::from(2)
            } else {
                eprintln!("error: {e:#}");
                ExitCode::from(1)
            }
        }
    }
}
