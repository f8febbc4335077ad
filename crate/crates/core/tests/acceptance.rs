//! Acceptance criteria 1–8. Runs as a plain binary so each criterion prints
//! exactly one PASS/FAIL line.

use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gorbit::algebra::{build_classical, Family, LieAlgebra};
use gorbit::catalog::{Catalog, BUILD_BUDGET};
use gorbit::cli::validate_catalog;
use gorbit::geodesic::{
    equivalence_audit, geodesic_graph_check, go_decision, locus_y, eigenspace_bracket_check, eigenspaces,
    scan_metrics, Decision, MetricContext, MetricSpec, ScanRow,
};
use gorbit::isotropy::{generic_stabilizer, Structure};
use gorbit::representations::RepTree;
use gorbit::spaces::{defining_block, embedding_from_rep, embedding_into, Embedding, ReductiveSpace, SpaceSpec};

const B3: &str = r#"{"k":{"family":"so","n":3},"g1":{"family":"so","n":4},"g2":{"family":"su","n":3}}"#;
const SU3_SO3: &str = r#"{"k":{"family":"so","n":3},"g1":{"family":"su","n":3},"g2":{"family":"su","n":3},"same_group":true}"#;

const SAMPLES: usize = 200;
const SEED: u64 = 42;
const GO_TOL: f64 = 1e-8;

// criterion 1
const LOCUS_ON: f64 = 1e-6;
const LOCUS_OFF: f64 = 0.05;
const NOT_GO_FLOOR: f64 = 1e-4;
const SCAN1_BUDGET: Duration = Duration::from_secs(60);
// criterion 2
const COUPLING_ZERO: f64 = 1e-8;
const SCAN2_BUDGET: Duration = Duration::from_secs(120);
// criterion 3
const GRAPH_SPECS: usize = 10;
const GRAPH_SAMPLES: usize = 100;
const GRAPH_TOL: f64 = 1e-9;
// criterion 4
const ISO_TRIALS: usize = 20;
const MIN_ATTAINMENT: f64 = 0.9;
// criterion 5
const AUDITS: usize = 100;
const AUDIT_TOL: f64 = 1e-8;
// criterion 6
const EIGEN_TOL: f64 = 1e-9;
// criterion 7
const JACOBI_TOL: f64 = 1e-10;
const RATIO_SPREAD: f64 = 1e-8;
// criterion 8
const RECORDS: usize = 83;
const COUNTS: [(char, usize); 4] = [('A', 29), ('B', 33), ('C', 13), ('D', 8)];

struct Outcome {
    ok: bool,
    detail: String,
}

fn space(json: &str) -> ReductiveSpace<f64> {
    SpaceSpec::from_json(json).unwrap().build().unwrap()
}

fn b7() -> ReductiveSpace<f64> {
    Catalog::shipped().lookup("B.7").unwrap().space_spec(None).unwrap().build().unwrap()
}

fn coupled_c(spec: &MetricSpec) -> f64 {
    match *spec {
        MetricSpec::Coupled { c, .. } => c,
        MetricSpec::Diagonal { .. } => 0.0,
    }
}

fn coupled_ab(spec: &MetricSpec) -> (f64, f64) {
    match *spec {
        MetricSpec::Coupled { a, b, .. } => (a, b),
        MetricSpec::Diagonal { x, y, .. } => (x, y),
    }
}

fn scan1(space: &ReductiveSpace<f64>) -> (Vec<ScanRow>, Duration) {
    let t = Instant::now();
    let rows = scan_metrics(space, &"x=0.25:3:0.25,y=0.25:3:0.25".parse().unwrap(), SAMPLES, SEED, GO_TOL).unwrap();
    (rows, t.elapsed())
}

fn scan2(space: &ReductiveSpace<f64>) -> (Vec<ScanRow>, Duration) {
    let t = Instant::now();
    let rows =
        scan_metrics(space, &"a=0.5:2:0.25,b=0.5:2:0.25,c=-0.4:0.4:0.2".parse().unwrap(), SAMPLES, SEED, GO_TOL).unwrap();
    (rows, t.elapsed())
}

fn criterion1(rows: &[ScanRow], elapsed: Duration) -> Outcome {
    let (mut on, mut off, mut bad) = (0, 0, Vec::new());
    let (mut worst_on, mut best_off) = (0.0f64, f64::INFINITY);
    for r in rows {
        if r.ratio_residual < LOCUS_ON {
            on += 1;
            worst_on = worst_on.max(r.max_residual);
            if !(r.max_residual < GO_TOL && r.decision == Decision::Go) {
                bad.push(format!("{:?}", r.spec));
            }
        } else if r.ratio_residual >= LOCUS_OFF {
            off += 1;
            best_off = best_off.min(r.max_residual);
            if !(r.max_residual > NOT_GO_FLOOR && r.decision == Decision::NotGo) {
                bad.push(format!("{:?}", r.spec));
            }
        }
    }
    Outcome {
        ok: rows.len() == 144 && on > 0 && bad.is_empty() && elapsed < SCAN1_BUDGET,
        detail: format!(
            "{} points, {on} on locus (max residual {worst_on:.1e}), {off} off locus (min residual {best_off:.1e}), {} violations, {:.1?}",
            rows.len(),
            bad.len(),
            elapsed
        ),
    }
}

fn criterion2(rows: &[ScanRow], elapsed: Duration) -> Outcome {
    let mut bad = Vec::new();
    let mut go = 0;
    for r in rows {
        let (a, b) = coupled_ab(&r.spec);
        let expected = coupled_c(&r.spec).abs() < COUPLING_ZERO && ((1.0 - a) / a - (b - 1.0) / b).abs() < LOCUS_ON;
        if r.decision == Decision::Go {
            go += 1;
        }
        if expected != (r.decision == Decision::Go) {
            bad.push(format!("{:?}", r.spec));
        }
    }
    Outcome {
        ok: !rows.is_empty() && go > 0 && bad.is_empty() && elapsed < SCAN2_BUDGET,
        detail: format!("{} PD points, {go} GO, {} mismatches {:?}, {:.1?}", rows.len(), bad.len(), bad, elapsed),
    }
}

fn on_curve_specs(space: &ReductiveSpace<f64>) -> Vec<MetricSpec> {
    let mut specs = Vec::new();
    let mut x = 0.3;
    while specs.len() < GRAPH_SPECS && x < 20.0 {
        if let Some(y) = locus_y(space, x) {
            specs.push(MetricSpec::diagonal(1.0, x, y));
        }
        x += 0.27;
    }
    specs
}

fn criterion3(spaces: &[(&str, &ReductiveSpace<f64>)]) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, sp) in spaces {
        let specs = on_curve_specs(sp);
        let mut worst = 0.0f64;
        let mut passed = specs.len() == GRAPH_SPECS;
        for (i, spec) in specs.iter().enumerate() {
            let g = geodesic_graph_check(*sp, spec, GRAPH_SAMPLES, SEED + i as u64, GRAPH_TOL).unwrap();
            worst = worst.max(g.max_residual).max(g.equivariance_residual);
            passed &= g.passed;
        }
        ok &= passed;
        parts.push(format!("{name}: {} specs, max residual {worst:.1e}", specs.len()));
    }
    Outcome { ok, detail: parts.join("; ") }
}

fn criterion4() -> Outcome {
    let cases: [(Family, usize, &str, usize, Structure); 6] = [
        (Family::So, 5, "defining", 6, Structure::Nonabelian),
        (Family::So, 7, "defining", 15, Structure::Nonabelian),
        (Family::Su, 3, "adjoint", 2, Structure::Abelian),
        (Family::So, 7, "alt2(defining)", 3, Structure::Abelian),
        (Family::Sp, 3, "defining", 10, Structure::Nonabelian),
        (Family::So, 5, "traceless(sym2(defining))", 0, Structure::Trivial),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (f, n, tree, dim, structure) in cases {
        let alg = Arc::new(build_classical::<f64>(f, n).unwrap());
        let rep = tree.parse::<RepTree>().unwrap().build(&alg).unwrap();
        let r = generic_stabilizer(&rep, ISO_TRIALS, SEED).unwrap();
        let good = r.dim == dim && r.structure == structure && r.attainment >= MIN_ATTAINMENT;
        ok &= good;
        parts.push(format!("{}:{tree}={}({:.0}%)", alg.label(), r.dim, 100.0 * r.attainment));
    }
    Outcome { ok, detail: parts.join(", ") }
}

fn criterion5(spaces: &[(&str, &ReductiveSpace<f64>)]) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut agree, mut geodesic) = (0, 0);
    for _ in 0..AUDITS {
        let (_, sp) = spaces[rng.gen_range(0..spaces.len())];
        let x = rng.gen_range(0.25..3.0);
        let spec = match locus_y(sp, x) {
            Some(y) if rng.gen_bool(0.5) => MetricSpec::diagonal(1.0, x, y),
            _ => MetricSpec::diagonal(1.0, x, rng.gen_range(0.25..3.0)),
        };
        let x_m = DVector::from_fn(sp.dim_m(), |_, _| rng.gen_range(-1.0..1.0));
        let z = MetricContext::new(sp, &spec).unwrap().feasibility(&x_m).z_k;
        let audit = equivalence_audit(sp, &spec, &x_m, &z, AUDIT_TOL).unwrap();
        if audit.consistent() {
            agree += 1;
        }
        if audit.geodesic {
            geodesic += 1;
        }
    }
    Outcome {
        ok: agree == AUDITS && geodesic > 0 && geodesic < AUDITS,
        detail: format!("{agree}/{AUDITS} consistent ({geodesic} geodesic, {} not)", AUDITS - geodesic),
    }
}

fn criterion6(cases: &[(&ReductiveSpace<f64>, &[ScanRow])]) -> Outcome {
    let (mut checked, mut worst, mut ok) = (0, 0.0f64, true);
    for (sp, rows) in cases {
        for r in rows.iter().filter(|r| r.decision == Decision::Go) {
            let a = MetricContext::new(*sp, &r.spec).unwrap().a;
            if eigenspaces(&a, 1e-9).len() < 2 {
                continue;
            }
            let report = go_decision(*sp, &r.spec, SAMPLES, SEED, GO_TOL).unwrap();
            let c = eigenspace_bracket_check(*sp, &r.spec, &report, EIGEN_TOL).unwrap();
            checked += 1;
            worst = worst.max(c.max_residual);
            ok &= c.passed;
        }
    }
    Outcome { ok: ok && checked > 0, detail: format!("{checked} GO points checked, max residual {worst:.1e}") }
}

/// Spread of `B_k / B_g|_k`, computed independently of `killing_ratio`.
fn ratio_spread(emb: &Embedding<f64>) -> f64 {
    let kk = &emb.source.killing;
    let pulled = emb.map.transpose() * &emb.target.killing * &emb.map;
    let c = kk.dot(&pulled) / pulled.dot(&pulled);
    (kk - pulled * c).abs().max() / kk.abs().max()
}

fn is_positive_definite(m: &DMatrix<f64>) -> bool {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().all(|&l| l > 0.0)
}

fn criterion7(built: usize) -> Outcome {
    let mut algebras: Vec<Arc<LieAlgebra<f64>>> = Vec::new();
    for n in 2..=5 {
        algebras.push(Arc::new(build_classical(Family::Su, n).unwrap()));
    }
    for n in 3..=8 {
        algebras.push(Arc::new(build_classical(Family::So, n).unwrap()));
    }
    for n in 2..=4 {
        algebras.push(Arc::new(build_classical(Family::Sp, n).unwrap()));
    }
    let mut worst_jacobi = 0.0f64;
    let mut pd = true;
    for alg in &algebras {
        worst_jacobi = worst_jacobi.max(alg.jacobi_residual());
        pd &= is_positive_definite(&alg.killing);
    }
    let find = |f: Family, n: usize| algebras.iter().find(|a| a.family == f && a.n == n).unwrap();
    let mut embeddings = Vec::new();
    for (s, t) in [
        ((Family::So, 3), (Family::So, 5)),
        ((Family::So, 4), (Family::So, 7)),
        ((Family::So, 3), (Family::Su, 3)),
        ((Family::So, 4), (Family::Su, 5)),
        ((Family::Su, 2), (Family::Su, 4)),
        ((Family::Su, 3), (Family::So, 6)),
        ((Family::Su, 2), (Family::Sp, 3)),
        ((Family::So, 3), (Family::Sp, 4)),
        ((Family::Sp, 2), (Family::Sp, 4)),
        ((Family::Sp, 2), (Family::So, 8)),
        ((Family::Sp, 2), (Family::Su, 4)),
    ] {
        embeddings.push(defining_block(find(s.0, s.1), find(t.0, t.1)).unwrap());
    }
    for (f, n, tree) in [
        (Family::So, 3, "traceless(sym2(defining))"),
        (Family::Su, 3, "adjoint"),
        (Family::So, 5, "alt2(defining)"),
        (Family::So, 3, "tensor(defining,defining)"),
    ] {
        let rep = tree.parse::<RepTree>().unwrap().build(find(f, n)).unwrap();
        embeddings.push(embedding_from_rep(&rep).unwrap());
    }
    let su2 = find(Family::Su, 2);
    let cx = "cx_sym2(defining)".parse::<RepTree>().unwrap().build(su2).unwrap();
    embeddings.push(embedding_into(&cx, find(Family::Su, 3)).unwrap());
    let worst_spread = embeddings.iter().map(ratio_spread).fold(0.0f64, f64::max);
    Outcome {
        ok: worst_jacobi < JACOBI_TOL && pd && worst_spread < RATIO_SPREAD,
        detail: format!(
            "{} algebras, Jacobi {worst_jacobi:.1e}, Killing PD {pd}; {} embeddings + {built} catalog spaces, ratio spread {worst_spread:.1e}",
            algebras.len(),
            embeddings.len()
        ),
    }
}

fn main() {
    let start = Instant::now();
    let b3 = space(B3);
    let su3 = space(SU3_SO3);
    let b7 = b7();

    let (rows1, t1) = scan1(&b3);
    let (rows2, t2) = scan2(&su3);
    let catalog = Catalog::shipped();
    let run = validate_catalog(catalog, BUILD_BUDGET, true, ISO_TRIALS, SEED);
    let built = run.reports.iter().filter(|r| r.build.as_ref().is_some_and(|b| b.ok)).count();
    let counts_ok = COUNTS.iter().all(|c| run.counts.contains(c));
    let c8 = Outcome {
        ok: run.records == RECORDS && counts_ok && run.ok(),
        detail: format!(
            "{} records {:?}, {} pass the dimension identity, {built} built, {} isotropy cross-checks, {} mismatches, {} alarms",
            run.records,
            run.counts,
            run.passed,
            run.cross_checks.len(),
            run.mismatched.len(),
            run.alarms.len()
        ),
    };

    let trio = [("B.3(n=3)", &b3), ("B.7", &b7), ("SU(3)xSU(3)/SO(3)", &su3)];
    let outcomes = [
        criterion1(&rows1, t1),
        criterion2(&rows2, t2),
        criterion3(&trio),
        criterion4(),
        criterion5(&trio),
        criterion6(&[(&b3, &rows1), (&su3, &rows2)]),
        criterion7(built),
        c8,
    ];
    let mut failed = 0;
    for (i, o) in outcomes.iter().enumerate() {
        println!("criterion {}: {} | {}", i + 1, if o.ok { "PASS" } else { "FAIL" }, o.detail);
        if !o.ok {
            failed += 1;
        }
    }
    println!("acceptance: {}/{} passed in {:.1?}", outcomes.len() - failed, outcomes.len(), start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
