//! JSON form of a certification report and the exit-code contract.

use reachcert_core::{CertificationReport, Confidence, Decision, Verdict};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const FORMAT_VERSION: u32 = 1;

pub const EXIT_INTERSECT: i32 = 0;
pub const EXIT_DISJOINT: i32 = 1;
pub const EXIT_NEAR_ZERO: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

/// 0 Intersect, 1 Disjoint, 2 near zero; no verdict counts as an error.
pub fn exit_code(overall: Option<Verdict>) -> i32 {
    match overall {
        Some(Verdict { decision: Decision::Disjoint, .. }) => EXIT_DISJOINT,
        Some(Verdict { confidence: Confidence::NearZero, .. }) => EXIT_NEAR_ZERO,
        Some(_) => EXIT_INTERSECT,
        None => EXIT_ERROR,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictJson {
    pub decision: String,
    pub confidence: String,
}

impl From<Verdict> for VerdictJson {
    fn from(v: Verdict) -> Self {
        Self { decision: v.decision.name().into(), confidence: v.confidence.name().into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverJson {
    pub status: String,
    pub iterations: usize,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub variables: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockJson {
    pub block: Option<usize>,
    pub value: Option<f64>,
    pub verdict: Option<VerdictJson>,
    pub witness: Option<Vec<f64>>,
    pub raw_witness_norm: Option<f64>,
    pub solver: SolverJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TolerancesJson {
    pub eps_zero: f64,
    pub tol_gap: f64,
    pub tol_feas: f64,
    pub max_iters: usize,
    pub regularization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridJson {
    pub horizon: f64,
    pub steps: usize,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub version: u32,
    pub scenario_digest: String,
    pub kind: String,
    pub overall: Option<VerdictJson>,
    pub exit_code: i32,
    pub separating_direction: Option<Vec<f64>>,
    pub combined_value: Option<f64>,
    pub blocks: Vec<BlockJson>,
    pub solved_blocks: Vec<usize>,
    pub blocks_total: usize,
    pub tolerances: TolerancesJson,
    pub grid: GridJson,
    pub wall_clock_seconds: f64,
}

impl ReportJson {
    pub fn new(report: &CertificationReport, scenario_bytes: &[u8], wall_clock_seconds: f64) -> Self {
        let blocks = report
            .blocks
            .iter()
            .map(|b| BlockJson {
                block: b.block,
                value: b.value,
                verdict: b.verdict.map(Into::into),
                witness: b.witness.clone(),
                raw_witness_norm: b.raw_witness_norm,
                solver: SolverJson {
                    status: b.diagnostics.status.name().into(),
                    iterations: b.diagnostics.iterations,
                    objective: b.diagnostics.objective,
                    dual_objective: b.diagnostics.dual_objective,
                    gap: b.diagnostics.gap,
                    primal_residual: b.diagnostics.primal_residual,
                    dual_residual: b.diagnostics.dual_residual,
                    variables: b.diagnostics.variables,
                    constraints: b.diagnostics.constraints,
                },
            })
            .collect();
        Self {
            version: FORMAT_VERSION,
            scenario_digest: format!("sha256:{}", sha256_hex(scenario_bytes)),
            kind: report.kind.name().into(),
            overall: report.overall.map(Into::into),
            exit_code: exit_code(report.overall),
            separating_direction: report.separating_direction.clone(),
            combined_value: report.combined_value,
            blocks,
            solved_blocks: report.solved_blocks.clone(),
            blocks_total: report.blocks_total,
            tolerances: TolerancesJson {
                eps_zero: report.eps_zero,
                tol_gap: report.settings.tol_gap,
                tol_feas: report.settings.tol_feas,
                max_iters: report.settings.max_iters,
                regularization: report.settings.regularization,
            },
            grid: GridJson { horizon: report.horizon, steps: report.steps, step: report.horizon / report.steps as f64 },
            wall_clock_seconds,
        }
    }
}
