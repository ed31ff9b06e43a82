//! Subcommand definitions and their implementations.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use reachcert_core::certify::certify_traced;
use reachcert_core::oracle::{
    bang_bang_endpoint, oracle_decide, sample_reach_set, sphere_directions, OracleSettings, OracleVerdict,
    DEFAULT_SEED,
};
use reachcert_core::support::support;
use reachcert_core::{solve, CertifyOptions, Error, SolverSettings, UncertaintyKind};
use serde::Serialize;

use crate::program::{self, build_programs};
use crate::report::{self, ReportJson, EXIT_ERROR};
use crate::scenario::{self, AgentTag, Scenario};

pub const SEED_ENV: &str = "REACHCERT_SEED";

#[derive(Debug, Parser)]
#[command(name = "reachcert", version, about = "Certify or falsify reach-set intersection of two integrator agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the cone program(s) and report a verdict. Exit 0 intersect, 1 disjoint, 2 near zero, 3 error.
    Certify(CertifyArgs),
    /// Evaluate support functions of one agent's reach set.
    Support(SupportArgs),
    /// Outer halfspaces (and bang-bang boundary points) of one block's reach set.
    Boundary(BoundaryArgs),
    /// Solver-free sampled decision and optional reach-set point cloud.
    Oracle(OracleArgs),
    /// Write the cone program(s) as JSON.
    DumpProgram(DumpArgs),
    /// Solve programs from a dump written by `dump-program`.
    SolveProgram(SolveProgramArgs),
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    pub scenario: PathBuf,
    /// Values within this distance of zero are not called Disjoint.
    #[arg(long, default_value_t = 1e-6)]
    pub eps_zero: f64,
    /// Solver gap and feasibility tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,
    /// Also write the cone program(s) to this file.
    #[arg(long)]
    pub dump_program: Option<PathBuf>,
    /// Emit one JSON line per solver iteration on stderr.
    #[arg(long)]
    pub trace: bool,
    /// Solve every box block even after a Disjoint one.
    #[arg(long)]
    pub no_shortcircuit: bool,
    /// Box block solve order, e.g. `1,0`; unlisted blocks follow ascending.
    #[arg(long, value_delimiter = ',')]
    pub block_order: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SupportArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "a")]
    pub agent: AgentTag,
    /// CSV file with one direction per row; non-unit rows are normalized.
    #[arg(long, conflicts_with = "axes")]
    pub directions_file: Option<PathBuf>,
    /// Use the ± coordinate axes (the default).
    #[arg(long)]
    pub axes: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundaryArgs {
    pub scenario: PathBuf,
    #[arg(long, value_enum, default_value = "a")]
    pub agent: AgentTag,
    #[arg(long, default_value_t = 0)]
    pub block: usize,
    #[arg(long, default_value_t = 360)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    pub scenario: PathBuf,
    /// Controls sampled per agent for the endpoint cloud.
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 8)]
    pub switches: usize,
    /// Overrides the REACHCERT_SEED environment variable.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 2048)]
    pub directions: usize,
    #[arg(long, default_value_t = 64)]
    pub refinement: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub margin: f64,
    /// Write sampled endpoints of both agents to this CSV file.
    #[arg(long)]
    pub endpoints: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    pub scenario: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveProgramArgs {
    pub dump: PathBuf,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

type CmdResult = Result<i32, String>;

/// Runs a parsed command line, writing diagnostics to `stderr`; returns the
/// process exit code.
pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Certify(a) => certify(a, stdout, stderr),
        Command::Support(a) => support_cmd(a, stdout, stderr),
        Command::Boundary(a) => boundary(a, stdout),
        Command::Oracle(a) => oracle(a, stdout),
        Command::DumpProgram(a) => dump_program(a, stdout),
        Command::SolveProgram(a) => solve_program(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(msg) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_ERROR
        }
    }
}

fn load(path: &std::path::Path) -> Result<Scenario, String> {
    scenario::load(&path.to_string_lossy()).map_err(|e| e.to_string())
}

/// Writes `text` with exactly one trailing newline to `out` or stdout.
fn emit(out: Option<&std::path::Path>, mut text: String, stdout: &mut dyn Write) -> Result<(), String> {
    while text.ends_with('\n') {
        text.pop();
    }
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string_pretty(v).map_err(|e| e.to_string())
}

fn settings(tol: Option<f64>, max_iters: usize) -> Result<SolverSettings, String> {
    let mut s = SolverSettings { max_iters, ..SolverSettings::default() };
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(format!("--tol must be positive, got {t}"));
        }
        s.tol_gap = t;
        s.tol_feas = t;
    }
    if !s.is_valid() {
        return Err("--max-iters must be at least 1".into());
    }
    Ok(s)
}

fn certify(args: CertifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let sc = load(&args.scenario)?;
    let options = CertifyOptions {
        settings: settings(args.tol, args.max_iters)?,
        eps_zero: args.eps_zero,
        shortcircuit: !args.no_shortcircuit,
        block_order: args.block_order,
    };
    if let Some(path) = &args.dump_program {
        let programs = build_programs(&sc.a, &sc.b).map_err(|e| e.to_string())?;
        emit(Some(path), to_json(&program::dump(&programs))?, stdout)?;
    }
    let start = Instant::now();
    let trace = args.trace;
    let report = certify_traced(&sc.a, &sc.b, &options, |block, rec| {
        if trace {
            let line = serde_json::json!({
                "block": block,
                "iteration": rec.iteration,
                "pcost": rec.primal_objective,
                "dcost": rec.dual_objective,
                "gap": rec.gap,
                "pres": rec.primal_residual,
                "dres": rec.dual_residual,
                "step": rec.step,
            });
            let _ = writeln!(stderr, "{line}");
        }
    })
    .map_err(|e| e.to_string())?;
    let json = ReportJson::new(&report, &sc.bytes, start.elapsed().as_secs_f64());
    emit(args.out.as_deref(), to_json(&json)?, stdout)?;
    Ok(json.exit_code)
}

fn fmt_row(values: impl IntoIterator<Item = String>) -> String {
    values.into_iter().collect::<Vec<_>>().join(",")
}

fn read_directions(path: &std::path::Path, n: usize, stderr: &mut dyn Write) -> Result<Vec<Vec<f64>>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let y = match parsed {
            Ok(y) => y,
            // a header line
            Err(_) if out.is_empty() && i == 0 => continue,
            Err(e) => return Err(format!("{}:{}: {e}", path.display(), i + 1)),
        };
        if y.len() != n {
            return Err(format!("{}:{}: expected {n} components, got {}", path.display(), i + 1, y.len()));
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(format!("{}:{}: direction must be nonzero and finite", path.display(), i + 1));
        }
        if (norm - 1.0).abs() > 1e-9 {
            let _ = writeln!(stderr, "warning: {}:{}: direction with norm {norm} normalized", path.display(), i + 1);
        }
        out.push(y.iter().map(|v| v / norm).collect());
    }
    if out.is_empty() {
        return Err(format!("{}: no directions", path.display()));
    }
    Ok(out)
}

fn axes(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .flat_map(|i| {
            [1.0, -1.0].map(|s| {
                let mut e = vec![0.0; n];
                e[i] = s;
                e
            })
        })
        .collect()
}

fn support_cmd(args: SupportArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CmdResult {
    let sc = load(&args.scenario)?;
    let agent = sc.agent(args.agent);
    let n = agent.system().n();
    let dirs = match &args.directions_file {
        Some(p) => read_directions(p, n, stderr)?,
        None => axes(n),
    };
    let mut lines = vec![fmt_row((0..n).map(|i| format!("y{i}")).chain(["support".into()]).collect::<Vec<_>>())];
    lines[0] = format!("index,{}", lines[0]);
    for (i, y) in dirs.iter().enumerate() {
        let h = support(agent, y).map_err(|e| e.to_string())?;
        lines.push(fmt_row(
            std::iter::once(i.to_string()).chain(y.iter().map(f64::to_string)).chain([h.to_string()]),
        ));
    }
    emit(args.out.as_deref(), lines.join("\n"), stdout)?;
    Ok(0)
}

fn boundary(args: BoundaryArgs, stdout: &mut dyn Write) -> CmdResult {
    let sc = load(&args.scenario)?;
    let agent = sc.agent(args.agent);
    let sys = agent.system();
    let range = sys.block_range(args.block).map_err(|e| e.to_string())?;
    let r = range.len();
    if !(2..=3).contains(&r) {
        return Err(Error::UnsupportedProjection(r).to_string());
    }
    if args.samples == 0 {
        return Err("--samples must be positive".into());
    }
    let (dirs, params): (Vec<Vec<f64>>, Vec<f64>) = if r == 2 {
        (0..args.samples)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / args.samples as f64;
                (vec![a.cos(), a.sin()], a)
            })
            .unzip()
    } else {
        let d: Vec<_> = sphere_directions(3, args.samples, DEFAULT_SEED).into_iter().take(args.samples).collect();
        let p = (0..d.len()).map(|i| i as f64).collect();
        (d, p)
    };
    let coords: Vec<String> = (0..r).map(|i| format!("c{i}")).collect();
    let mut lines = vec![format!("kind,param,{},value", coords.join(","))];
    let mut padded = vec![0.0; sys.n()];
    for (d, p) in dirs.iter().zip(&params) {
        padded[range.clone()].copy_from_slice(d);
        let h = support(agent, &padded).map_err(|e| e.to_string())?;
        lines.push(fmt_row(
            ["halfspace".to_string(), p.to_string()].into_iter().chain(d.iter().map(f64::to_string)).chain([h.to_string()]),
        ));
    }
    if agent.uncertainty().kind() == UncertaintyKind::Box {
        for (d, p) in dirs.iter().zip(&params) {
            let x = bang_bang_endpoint(agent, args.block, d).map_err(|e| e.to_string())?;
            let v: f64 = x.iter().zip(d).map(|(a, b)| a * b).sum();
            lines.push(fmt_row(
                ["point".to_string(), p.to_string()].into_iter().chain(x.iter().map(f64::to_string)).chain([v.to_string()]),
            ));
        }
    }
    emit(args.out.as_deref(), lines.join("\n"), stdout)?;
    Ok(0)
}

/// `--seed`, else `REACHCERT_SEED`, else the built-in default.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64, String> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

#[derive(Debug, Serialize)]
struct OracleJson {
    version: u32,
    scenario_digest: String,
    verdict: &'static str,
    min_value: f64,
    argmin: Vec<f64>,
    band: f64,
    evaluations: usize,
    seed: u64,
    directions: usize,
    refinement: usize,
    margin: f64,
}

fn oracle(args: OracleArgs, stdout: &mut dyn Write) -> CmdResult {
    let sc = load(&args.scenario)?;
    let seed = resolve_seed(args.seed)?;
    let settings =
        OracleSettings { directions: args.directions, refinement: args.refinement, margin: args.margin, seed };
    let d = oracle_decide(&sc.a, &sc.b, &settings).map_err(|e| e.to_string())?;
    if let Some(path) = &args.endpoints {
        let n = sc.a.system().n();
        let mut lines = vec![format!("agent,{}", (0..n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(","))];
        for (tag, agent) in [("a", &sc.a), ("b", &sc.b)] {
            let set = sample_reach_set(agent, args.samples, args.switches, seed).map_err(|e| e.to_string())?;
            for p in &set.points {
                lines.push(fmt_row(std::iter::once(tag.to_string()).chain(p.iter().map(f64::to_string))));
            }
        }
        emit(Some(path), lines.join("\n"), stdout)?;
    }
    let json = OracleJson {
        version: report::FORMAT_VERSION,
        scenario_digest: format!("sha256:{}", report::sha256_hex(&sc.bytes)),
        verdict: d.verdict.name(),
        min_value: d.min_value,
        argmin: d.argmin,
        band: d.band,
        evaluations: d.evaluations,
        seed,
        directions: args.directions,
        refinement: args.refinement,
        margin: args.margin,
    };
    emit(args.out.as_deref(), to_json(&json)?, stdout)?;
    Ok(match d.verdict {
        OracleVerdict::Intersect => 0,
        OracleVerdict::Disjoint => 1,
        OracleVerdict::Inconclusive => 2,
    })
}

fn dump_program(args: DumpArgs, stdout: &mut dyn Write) -> CmdResult {
    let sc = load(&args.scenario)?;
    let programs = build_programs(&sc.a, &sc.b).map_err(|e| e.to_string())?;
    emit(args.out.as_deref(), to_json(&program::dump(&programs))?, stdout)?;
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SolvedJson {
    block: Option<usize>,
    status: &'static str,
    objective: f64,
    iterations: usize,
}

fn solve_program(args: SolveProgramArgs, stdout: &mut dyn Write) -> CmdResult {
    let text = std::fs::read_to_string(&args.dump).map_err(|e| format!("{}: {e}", args.dump.display()))?;
    let dump = program::parse(&text).map_err(|e| format!("{}:{e}", args.dump.display()))?;
    let s = settings(args.tol, SolverSettings::default().max_iters)?;
    let mut out = Vec::new();
    for p in &dump.programs {
        let prog = p.to_program()?;
        let sol = solve(&prog, &s);
        out.push(SolvedJson { block: p.block, status: sol.status.name(), objective: sol.objective, iterations: sol.iterations });
    }
    let code = if out.iter().all(|s| s.status == "optimal") { 0 } else { EXIT_ERROR };
    emit(args.out.as_deref(), to_json(&out)?, stdout)?;
    Ok(code)
}
