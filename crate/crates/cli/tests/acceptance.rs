//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reachcert::program::ProgramDump;
use reachcert::report::ReportJson;
use reachcert::scenario;
use reachcert_core::linalg::{norm2, Matrix};
use reachcert_core::oracle::{oracle_decide, oracle_support, OracleSettings, OracleVerdict};
use reachcert_core::support::{support, support_box_block};
use reachcert_core::transcribe::{Layout, LinearRows, SocBlock};
use reachcert_core::{
    certify, solve, AgentScenario, CertificationReport, CertifyOptions, ConeProgram, Decision, IntegratorSystem,
    NormExponent, SolveStatus, SolverSettings, TimeGrid, UncertaintyKind, UncertaintyModel,
};

/// Block-2 value of the K = 40 two-block box fixture, from an external conic
/// solver run (`tools/two_block_reference.py`).
const TWO_BLOCK_P2_K40: f64 = -0.540_431_404_9;
const TWO_BLOCK_P2_K200: f64 = -0.540_704_932_9;
const TWO_BLOCK_P2_K400: f64 = -0.540_702_395_8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn full_options() -> CertifyOptions {
    CertifyOptions { shortcircuit: false, ..CertifyOptions::default() }
}

/// `h_A(y) + h_B(−y)` for box block `j` or the whole state.
fn pair_support(a: &AgentScenario, b: &AgentScenario, block: Option<usize>, y: &[f64]) -> f64 {
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    match block {
        Some(j) => support_box_block(a, j, y).unwrap() + support_box_block(b, j, &neg).unwrap(),
        None => support(a, y).unwrap() + support(b, &neg).unwrap(),
    }
}

fn random_corpus(count: usize, seed: u64) -> Vec<(AgentScenario, AgentScenario)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let steps = [8, 16, 32][rng.random_range(0..3)];
            common::random_pair(&mut rng, 6, 3, steps, i % 2 == 0)
        })
        .collect()
}

fn sign_property(corpus: &[(AgentScenario, AgentScenario)], reports: &[CertificationReport], secs: f64) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut unsolved = 0;
    for r in reports {
        for b in &r.blocks {
            match (b.diagnostics.status, b.value) {
                (SolveStatus::Optimal, Some(v)) => worst = worst.max(v),
                _ => unsolved += 1,
            }
        }
    }
    let disjoint = reports.iter().filter(|r| r.overall.is_some_and(|v| v.decision == Decision::Disjoint)).count();
    let pass = worst <= 1e-9 && unsolved == 0 && secs < 60.0;
    outcome(
        pass,
        format!(
            "{} scenarios ({disjoint} disjoint), max p̃ = {worst:.3e}, unsolved programs = {unsolved}, {secs:.1} s",
            corpus.len()
        ),
    )
}

fn lossless(corpus: &[(AgentScenario, AgentScenario)], reports: &[CertificationReport]) -> Outcome {
    let (mut checked, mut off_sphere, mut value_dev) = (0, 0, 0.0_f64);
    for ((a, b), r) in corpus.iter().zip(reports) {
        for blk in &r.blocks {
            let (Some(v), Some(y)) = (blk.value, &blk.witness) else { continue };
            if v >= -1e-6 {
                continue;
            }
            checked += 1;
            let n = norm2(y);
            // allow a few ulps above one from the normalization
            off_sphere += usize::from(!(1.0 - 1e-6..=1.0 + 1e-12).contains(&n));
            value_dev = value_dev.max((pair_support(a, b, blk.block, y) - v).abs());
        }
    }
    let pass = checked > 0 && off_sphere == 0 && value_dev <= 1e-6;
    outcome(pass, format!("{checked} disjoint programs, {off_sphere} witnesses off the unit sphere, max |h − p̃| = {value_dev:.2e}"))
}

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_reachcert")
}

fn fixture(k: usize) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("fixtures/two_block_k{k}.json"))
}

fn run_certify(path: &Path) -> (i32, ReportJson) {
    let out = Command::new(binary()).arg("certify").arg(path).output().unwrap();
    let report = serde_json::from_slice(&out.stdout).expect("certify prints a JSON report");
    (out.status.code().unwrap_or(-1), report)
}

/// Solves a dumped program with Clarabel: `Gη + s = h`, `s ∈ ℝ₊ × SOC…`.
fn clarabel_objective(p: &reachcert::program::ProgramFile) -> Option<f64> {
    let n = p.num_vars;
    let mut rows: Vec<Vec<f64>> = p.linear.matrix.clone();
    let mut rhs = p.linear.rhs.clone();
    let mut cones = vec![SupportedConeT::NonnegativeConeT(rows.len())];
    for soc in &p.soc {
        rows.push(soc.linear.iter().map(|v| -v).collect());
        rhs.push(soc.constant);
        for r in &soc.matrix {
            rows.push(r.iter().map(|v| -v).collect());
            rhs.push(0.0);
        }
        cones.push(SupportedConeT::SecondOrderConeT(soc.matrix.len() + 1));
    }
    let (mut colptr, mut rowval, mut nzval) = (vec![0], Vec::new(), Vec::new());
    for c in 0..n {
        for (i, r) in rows.iter().enumerate() {
            if r[c] != 0.0 {
                rowval.push(i);
                nzval.push(r[c]);
            }
        }
        colptr.push(rowval.len());
    }
    let a = CscMatrix::new(rows.len(), n, colptr, rowval, nzval);
    let q = CscMatrix::new(n, n, vec![0; n + 1], vec![], vec![]);
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-10)
        .tol_gap_rel(1e-10)
        .tol_feas(1e-10)
        .build()
        .ok()?;
    let mut solver = DefaultSolver::new(&q, &p.objective, &a, &rhs, &cones, settings).ok()?;
    solver.solve();
    (solver.solution.status == SolverStatus::Solved).then_some(solver.solution.obj_val)
}

fn two_block() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    for (k, pinned) in [(40, TWO_BLOCK_P2_K40), (200, TWO_BLOCK_P2_K200), (400, TWO_BLOCK_P2_K400)] {
        let (code, r) = run_certify(&fixture(k));
        let v1 = r.blocks.first().and_then(|b| b.value);
        let v2 = r.blocks.get(1).and_then(|b| b.value);
        let d1 = r.blocks.first().and_then(|b| b.verdict.as_ref()).map(|v| v.decision.clone());
        let d2 = r.blocks.get(1).and_then(|b| b.verdict.as_ref()).map(|v| v.decision.clone());
        let ok = code == 1
            && v1.is_some_and(|v| v.abs() <= 1e-6)
            && d1.as_deref() == Some("intersect")
            && d2.as_deref() == Some("disjoint")
            && v2.is_some_and(|v| (v - pinned).abs() <= 1e-5 && (v - TWO_BLOCK_P2_K40).abs() <= 1e-3);
        pass &= ok;
        notes.push(format!("K={k}: exit {code}, p̃₁ = {:.1e}, p̃₂ = {:.7}", v1.unwrap_or(f64::NAN), v2.unwrap_or(f64::NAN)));
    }

    // the dumped K = 40 program, solved by an external conic solver
    let dir = tempfile::tempdir().unwrap();
    let dump_path = dir.path().join("two_block.json");
    let status = Command::new(binary()).arg("dump-program").arg(fixture(40)).arg("--out").arg(&dump_path).status().unwrap();
    let dump: ProgramDump = serde_json::from_str(&std::fs::read_to_string(&dump_path).unwrap()).unwrap();
    let external = dump.programs.get(1).and_then(clarabel_objective);
    let ext_ok = status.success() && external.is_some_and(|v| (v - TWO_BLOCK_P2_K40).abs() <= 1e-5);
    pass &= ext_ok;
    notes.push(format!("external p̃₂ = {:.7}", external.unwrap_or(f64::NAN)));

    // the oracle agrees on the block verdicts
    let sc = scenario::load(&fixture(40).to_string_lossy()).unwrap();
    let d = oracle_decide(&sc.a, &sc.b, &OracleSettings::default()).unwrap();
    pass &= d.verdict == OracleVerdict::Disjoint;
    notes.push(format!("oracle {} (min {:.4})", d.verdict.name(), d.min_value));
    outcome(pass, notes.join("; "))
}

/// Robustness of a certified verdict: `|p̃|` when disjoint, and the sampled
/// sphere minimum (the nonconvex value, which is positive for a robust
/// overlap) when intersecting.
fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0004);
    let settings = OracleSettings::default();
    let (mut compared, mut agree, mut inconclusive, mut skipped, mut contradictions) = (0, 0, 0, 0, 0);
    let mut intersecting = 0;
    let mut attempts = 0;
    while compared < 100 && attempts < 400 {
        attempts += 1;
        let steps = [8, 16, 32][rng.random_range(0..3)];
        let (a, b) = common::random_pair(&mut rng, 4, 2, steps, attempts % 2 == 0);
        let r = certify(&a, &b, &full_options()).unwrap();
        let Some(overall) = r.overall else {
            skipped += 1;
            continue;
        };
        let o = oracle_decide(&a, &b, &settings).unwrap();
        let robust = match overall.decision {
            Decision::Disjoint => r.combined_value.is_some_and(|v| v.abs() > 1e-4),
            Decision::Intersect => o.min_value > 1e-4,
        };
        if !robust {
            skipped += 1;
            continue;
        }
        compared += 1;
        intersecting += usize::from(overall.decision == Decision::Intersect);
        match (o.verdict, overall.decision) {
            (OracleVerdict::Inconclusive, _) => inconclusive += 1,
            (OracleVerdict::Disjoint, Decision::Disjoint) | (OracleVerdict::Intersect, Decision::Intersect) => {
                agree += 1
            }
            _ => contradictions += 1,
        }
    }
    let decided = compared - inconclusive;
    let pass = compared >= 100 && contradictions == 0 && agree == decided;
    outcome(
        pass,
        format!(
            "{compared} robust scenarios ({intersecting} intersecting, {skipped} near-boundary skipped): \
             {agree}/{decided} decided agree, {inconclusive} inconclusive"
        ),
    )
}

/// Smooth scenario resampled on `steps` intervals; same functions for every K.
fn smooth_scenario(seed: u64, steps: usize, boxed: bool) -> AgentScenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = common::degrees(&mut rng, 5, 2);
    let sys = IntegratorSystem::new(r).unwrap();
    let m = sys.m();
    let horizon = rng.random_range(0.8..2.0);
    let x0: Vec<f64> = (0..sys.n()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let wave = |rng: &mut ChaCha8Rng| {
        let (c, a, w, ph) =
            (rng.random_range(0.5..1.0), rng.random_range(0.0..0.4), rng.random_range(1.0..4.0), rng.random_range(0.0..6.3));
        move |s: f64| c + a * (w * s + ph).sin()
    };
    let grid = TimeGrid::new(horizon, steps).unwrap();
    let sample = |f: &dyn Fn(f64) -> f64| grid.breakpoints().map(f).collect::<Vec<f64>>();
    let u = if boxed {
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        for _ in 0..m {
            let (lo, hi) = (wave(&mut rng), wave(&mut rng));
            alpha.push(sample(&|s| -lo(s)));
            beta.push(sample(&|s| 0.2 + hi(s)));
        }
        UncertaintyModel::box_bounds(alpha, beta).unwrap()
    } else {
        let p = common::random_p(&mut rng);
        let ell = wave(&mut rng);
        UncertaintyModel::norm_ball(p, sample(&ell)).unwrap()
    };
    AgentScenario::new(sys, x0, u, grid).unwrap()
}

fn quadrature_convergence() -> Outcome {
    const K: usize = 16;
    let mut notes = Vec::new();
    let mut pass = true;
    for (boxed, label) in [(true, "box"), (false, "ball")] {
        let (mut e1, mut e2, mut pairs) = (0.0, 0.0, 0);
        for s in 0..20 {
            let seed = 0x5c0_0000 + s;
            let coarse = smooth_scenario(seed, K, boxed);
            let fine = smooth_scenario(seed, 2 * K, boxed);
            let reference = smooth_scenario(seed, 64 * K, boxed);
            let n = coarse.system().n();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..64 {
                let mut y: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                let norm = norm2(&y);
                y.iter_mut().for_each(|v| *v /= norm);
                let exact = oracle_support(&reference, &y).unwrap().value;
                e1 += (support(&coarse, &y).unwrap() - exact).abs();
                e2 += (support(&fine, &y).unwrap() - exact).abs();
                pairs += 1;
            }
        }
        let ratio = e1 / e2;
        pass &= (3.5..=4.5).contains(&ratio);
        notes.push(format!("{label}: Σe_K/Σe_2K = {ratio:.3} over {pairs} directions"));
    }
    outcome(pass, notes.join("; "))
}

fn ball_box_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce_0006);
    let mut worst = 0.0_f64;
    let mut failures = 0;
    for _ in 0..20 {
        let steps = [8, 16, 32][rng.random_range(0..3)];
        let (a, b) = common::random_pair(&mut rng, 6, 3, steps, false);
        let m = a.system().m();
        let inf = |sc: &AgentScenario| {
            let ell = match sc.uncertainty() {
                UncertaintyModel::NormBall { ell, .. } => ell.clone(),
                _ => unreachable!(),
            };
            (
                sc.with_uncertainty(UncertaintyModel::norm_ball(NormExponent::Infinity, ell.clone()).unwrap()).unwrap(),
                sc.with_uncertainty(
                    UncertaintyModel::box_bounds(
                        vec![ell.iter().map(|v| -v).collect(); m],
                        vec![ell.clone(); m],
                    )
                    .unwrap(),
                )
                .unwrap(),
            )
        };
        let (ball_a, box_a) = inf(&a);
        let (ball_b, box_b) = inf(&b);
        let ball = certify(&ball_a, &ball_b, &full_options()).unwrap();
        let boxes = certify(&box_a, &box_b, &full_options()).unwrap();
        match (ball.combined_value, boxes.combined_value) {
            (Some(x), Some(y)) => worst = worst.max((x - y).abs()),
            _ => failures += 1,
        }
    }
    outcome(worst <= 1e-7 && failures == 0, format!("20 pairs, max |p̃_ball − p̃_box| = {worst:.2e}"))
}

fn solver_fixtures() -> Outcome {
    let ball = |c: &[f64]| {
        let n = c.len();
        ConeProgram::new(
            c.to_vec(),
            LinearRows { matrix: Matrix::zeros(0, n), rhs: vec![] },
            vec![SocBlock { matrix: Matrix::identity(n), linear: vec![0.0; n], constant: 1.0 }],
            Layout { direction: 0..n, epigraph: n..n, auxiliary: n..n },
        )
        .unwrap()
    };
    let mut soc = Matrix::zeros(2, 3);
    soc[(0, 0)] = 1.0;
    soc[(1, 1)] = 1.0;
    let mixed = ConeProgram::new(
        vec![1.0, 2.0, 0.5],
        LinearRows { matrix: Matrix::from_rows(&[vec![0.0, 0.0, 1.0]], 3), rhs: vec![3.0] },
        vec![SocBlock { matrix: soc, linear: vec![0.0, 0.0, 1.0], constant: 0.0 }],
        Layout { direction: 0..2, epigraph: 2..3, auxiliary: 3..3 },
    )
    .unwrap();
    let cases = [
        ("1-D ball", ball(&[1.0]), -1.0),
        ("R^6 ball", ball(&[3.0, -4.0, 12.0, 0.0, 0.0, 0.0]), -13.0),
        ("hand KKT", mixed, 1.5 - 3.0 * 5f64.sqrt()),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, p, opt) in cases {
        let s = solve(&p, &SolverSettings::default());
        let err = (s.objective - opt).abs();
        pass &= s.status == SolveStatus::Optimal && err <= 1e-8 && s.iterations <= 30;
        notes.push(format!("{name}: {} its, err {err:.1e}", s.iterations));
    }
    outcome(pass, notes.join("; "))
}

fn scalability() -> Outcome {
    const K: usize = 16;
    let mut pts = Vec::new();
    for n in [5usize, 10, 20, 40] {
        let sys = IntegratorSystem::new(vec![n - n / 2, n / 2]).unwrap();
        let grid = TimeGrid::new(1.0, K).unwrap();
        let ell = vec![1.0; K + 1];
        let mk = |x0: Vec<f64>| {
            AgentScenario::new(sys.clone(), x0, UncertaintyModel::norm_ball(NormExponent::Two, ell.clone()).unwrap(), grid)
                .unwrap()
        };
        let a = mk(vec![0.0; n]);
        let b = mk((0..n).map(|i| 3.0 + i as f64).collect());
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let t = Instant::now();
            let r = certify(&a, &b, &CertifyOptions::default()).unwrap();
            let its = r.blocks[0].diagnostics.iterations.max(1);
            best = best.min(t.elapsed().as_secs_f64() / its as f64);
        }
        pts.push(((n + K + 1) as f64, best));
    }
    // least-squares slope of log time against log size
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| pts.iter().map(f).sum::<f64>() / pts.len() as f64;
    let (mx, my) = (mean(&|p| p.0.ln()), mean(&|p| p.1.ln()));
    let sxy: f64 = pts.iter().map(|p| (p.0.ln() - mx) * (p.1.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let detail = pts.iter().map(|(s, t)| format!("{s}: {:.2} ms", t * 1e3)).collect::<Vec<_>>().join(", ");
    outcome(slope <= 3.0, format!("log-log slope {slope:.2} ({detail})"))
}

fn main() {
    let start = Instant::now();
    let corpus = random_corpus(200, 0xacce_0001);
    let reports: Vec<_> = corpus.iter().map(|(a, b)| certify(a, b, &full_options()).unwrap()).collect();
    let secs = start.elapsed().as_secs_f64();
    assert_eq!(corpus.iter().filter(|(a, _)| a.uncertainty().kind() == UncertaintyKind::Box).count(), 100);

    let results = [
        ("1 sign property", sign_property(&corpus, &reports, secs)),
        ("2 lossless convexification", lossless(&corpus, &reports)),
        ("3 two-block box fixture", two_block()),
        ("4 oracle equivalence", oracle_equivalence()),
        ("5 quadrature convergence", quadrature_convergence()),
        ("6 ball/box consistency", ball_box_consistency()),
        ("7 solver fixtures", solver_fixtures()),
        ("8 scalability", scalability()),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
