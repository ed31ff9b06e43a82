//! Verdicts from the sign of the minimized difference-set support function.
//!
//! The reach sets of two agents intersect iff `h_A(y) + h_B(−y) ≥ 0` for every
//! `y`. Minimizing over the unit ball instead of the sphere is lossless: the
//! optimum is `0` when the sets intersect and strictly negative, attained on
//! the sphere, when they do not. Box scenarios factor across input blocks and
//! are certified block by block; the sets are disjoint iff some block is.
//!
//! The value reported for a block is the exact objective at the direction the
//! solver returned, which is an upper bound on the true minimum and therefore
//! never claims more separation than a concrete direction exhibits. When it is
//! negative the direction is rescaled to unit length, which by homogeneity only
//! lowers it further.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::norm2;
use crate::model::AgentScenario;
use crate::solver::{solve_traced, IterationRecord, Solution, SolveStatus, SolverSettings};
use crate::support::UncertaintyKind;
use crate::transcribe::{pair_data_box, pair_data_normball, PairData};
use crate::{Error, Result};

/// Witnesses shorter than this at a near-zero optimum mean the minimizer is
/// the origin alone, i.e. the difference set has `0` in its interior.
const TOUCHING_WITNESS_NORM: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Intersect,
    Disjoint,
}

impl Decision {
    pub fn name(self) -> &'static str {
        match self {
            Self::Intersect => "intersect",
            Self::Disjoint => "disjoint",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Confidence {
    Certified,
    /// The optimum lies within `ε_zero` of `0` at a nonzero direction: the
    /// sets touch, or miss each other by less than the tolerance.
    NearZero,
}

impl Confidence {
    pub fn name(self) -> &'static str {
        match self {
            Self::Certified => "certified",
            Self::NearZero => "near_zero",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub decision: Decision,
    pub confidence: Confidence,
}

impl Verdict {
    pub const fn new(decision: Decision, confidence: Confidence) -> Self {
        Self { decision, confidence }
    }
}

/// Sign logic with the default consistency tolerance of `1e-9`.
///
/// ```
/// use reachcert_core::{decide, Confidence, Decision};
/// let v = decide(-0.54, 1.0, 1e-6).unwrap();
/// assert_eq!((v.decision, v.confidence), (Decision::Disjoint, Confidence::Certified));
/// let v = decide(-1e-9, 0.3, 1e-6).unwrap();
/// assert_eq!((v.decision, v.confidence), (Decision::Intersect, Confidence::NearZero));
/// ```
pub fn decide(value: f64, witness_norm: f64, eps_zero: f64) -> Result<Verdict> {
    decide_with_tolerance(value, witness_norm, eps_zero, SolverSettings::default().tol_feas)
}

/// Like [`decide`], rejecting values above `tol` as inconsistent: every
/// program built here has the feasible point `η = 0` with objective `0`.
pub fn decide_with_tolerance(value: f64, witness_norm: f64, eps_zero: f64, tol: f64) -> Result<Verdict> {
    if !value.is_finite() || value > tol {
        return Err(Error::Consistency(format!("optimal value {value} exceeds the feasibility tolerance {tol}")));
    }
    if value < -eps_zero {
        return Ok(Verdict::new(Decision::Disjoint, Confidence::Certified));
    }
    let confidence =
        if witness_norm >= TOUCHING_WITNESS_NORM { Confidence::NearZero } else { Confidence::Certified };
    Ok(Verdict::new(Decision::Intersect, confidence))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub settings: SolverSettings,
    pub eps_zero: f64,
    /// Stop at the first Disjoint box block.
    pub shortcircuit: bool,
    /// Order in which box blocks are solved; ascending when `None`.
    pub block_order: Option<Vec<usize>>,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { settings: SolverSettings::default(), eps_zero: 1e-6, shortcircuit: true, block_order: None }
    }
}

/// Solver outcome for one program, independent of the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub status: SolveStatus,
    pub iterations: usize,
    /// Raw primal objective at the returned iterate.
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub variables: usize,
    pub constraints: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    /// Input block for box scenarios, `None` for the single norm-ball program.
    pub block: Option<usize>,
    /// Certified `p̃*`; `None` if the solver did not converge.
    pub value: Option<f64>,
    pub verdict: Option<Verdict>,
    /// Unit length when Disjoint, otherwise the solver's direction.
    pub witness: Option<Vec<f64>>,
    /// Euclidean norm of the direction before any rescaling.
    pub raw_witness_norm: Option<f64>,
    pub diagnostics: SolverDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub kind: UncertaintyKind,
    pub blocks: Vec<BlockReport>,
    /// `None` when some required program failed to converge.
    pub overall: Option<Verdict>,
    /// Witness of the first Disjoint block, zero-padded to `ℝⁿ`.
    pub separating_direction: Option<Vec<f64>>,
    /// Minimum over the full unit ball: `p̃*` for a norm ball, and
    /// `−(Σ_j p̃_j²)^{1/2}` for a box once every block is solved.
    pub combined_value: Option<f64>,
    pub eps_zero: f64,
    pub settings: SolverSettings,
    pub horizon: f64,
    pub steps: usize,
    /// Blocks in the order they were solved.
    pub solved_blocks: Vec<usize>,
    pub blocks_total: usize,
}

/// Certifies either uncertainty kind; both agents must share it.
pub fn certify(a: &AgentScenario, b: &AgentScenario, options: &CertifyOptions) -> Result<CertificationReport> {
    certify_traced(a, b, options, |_, _| {})
}

/// [`certify`] with a per-iteration observer receiving the block index.
pub fn certify_traced(
    a: &AgentScenario,
    b: &AgentScenario,
    options: &CertifyOptions,
    observer: impl FnMut(Option<usize>, &IterationRecord),
) -> Result<CertificationReport> {
    match a.uncertainty().kind() {
        UncertaintyKind::NormBall => normball(a, b, options, observer),
        UncertaintyKind::Box => boxes(a, b, options, observer),
    }
}

pub fn certify_normball(a: &AgentScenario, b: &AgentScenario, options: &CertifyOptions) -> Result<CertificationReport> {
    normball(a, b, options, |_, _| {})
}

pub fn certify_box(a: &AgentScenario, b: &AgentScenario, options: &CertifyOptions) -> Result<CertificationReport> {
    boxes(a, b, options, |_, _| {})
}

fn check_options(options: &CertifyOptions) -> Result<()> {
    if !options.settings.is_valid() {
        return Err(Error::Argument("solver tolerances must be positive and max_iters at least 1".into()));
    }
    if !(options.eps_zero >= 0.0 && options.eps_zero.is_finite()) {
        return Err(Error::Argument(format!("eps_zero = {} must be finite and nonnegative", options.eps_zero)));
    }
    Ok(())
}

fn normball(
    a: &AgentScenario,
    b: &AgentScenario,
    options: &CertifyOptions,
    mut observer: impl FnMut(Option<usize>, &IterationRecord),
) -> Result<CertificationReport> {
    check_options(options)?;
    let data = pair_data_normball(a, b)?;
    let block = solve_block(&data, None, options, &mut observer)?;
    let separating_direction = match block.verdict {
        Some(v) if v.decision == Decision::Disjoint => block.witness.clone(),
        _ => None,
    };
    Ok(CertificationReport {
        kind: UncertaintyKind::NormBall,
        overall: block.verdict,
        combined_value: block.value,
        separating_direction,
        blocks: vec![block],
        eps_zero: options.eps_zero,
        settings: options.settings,
        horizon: a.grid().horizon(),
        steps: a.grid().steps(),
        solved_blocks: vec![0],
        blocks_total: 1,
    })
}

fn boxes(
    a: &AgentScenario,
    b: &AgentScenario,
    options: &CertifyOptions,
    mut observer: impl FnMut(Option<usize>, &IterationRecord),
) -> Result<CertificationReport> {
    check_options(options)?;
    let sys = a.system();
    let m = sys.m();
    let order: Vec<usize> = match &options.block_order {
        Some(order) => {
            let mut seen = vec![false; m];
            for &j in order {
                if j >= m {
                    return Err(Error::BlockIndex { index: j, blocks: m });
                }
                if core::mem::replace(&mut seen[j], true) {
                    return Err(Error::Argument(format!("block {j} listed twice in the block order")));
                }
            }
            // unlisted blocks follow in ascending order
            order.iter().copied().chain((0..m).filter(|j| !seen[*j])).collect()
        }
        None => (0..m).collect(),
    };

    // build all pair data up front so pairing errors surface before solving
    let data: Vec<PairData> = (0..m).map(|j| pair_data_box(a, b, j)).collect::<Result<_>>()?;

    let mut blocks = Vec::with_capacity(m);
    let mut solved_blocks = Vec::with_capacity(m);
    let mut separating_direction = None;
    for &j in &order {
        let report = solve_block(&data[j], Some(j), options, &mut observer)?;
        solved_blocks.push(j);
        let disjoint = matches!(report.verdict, Some(v) if v.decision == Decision::Disjoint);
        if disjoint && separating_direction.is_none() {
            let mut y = vec![0.0; sys.n()];
            let range = sys.block_range(j)?;
            y[range].copy_from_slice(report.witness.as_deref().expect("disjoint blocks carry a witness"));
            separating_direction = Some(y);
        }
        blocks.push(report);
        if disjoint && options.shortcircuit {
            break;
        }
    }

    let verdicts: Vec<Option<Verdict>> = blocks.iter().map(|b| b.verdict).collect();
    let overall = if verdicts.iter().flatten().any(|v| v.decision == Decision::Disjoint) {
        Some(Verdict::new(Decision::Disjoint, Confidence::Certified))
    } else if verdicts.iter().any(Option::is_none) {
        None
    } else if verdicts.iter().flatten().any(|v| v.confidence == Confidence::NearZero) {
        Some(Verdict::new(Decision::Intersect, Confidence::NearZero))
    } else {
        Some(Verdict::new(Decision::Intersect, Confidence::Certified))
    };
    let combined_value = if blocks.len() == m {
        blocks
            .iter()
            .map(|b| b.value.map(|v| v.min(0.0) * v.min(0.0)))
            .sum::<Option<f64>>()
            .map(|s| -libm::sqrt(s))
    } else {
        None
    };

    Ok(CertificationReport {
        kind: UncertaintyKind::Box,
        blocks,
        overall,
        separating_direction,
        combined_value,
        eps_zero: options.eps_zero,
        settings: options.settings,
        horizon: a.grid().horizon(),
        steps: a.grid().steps(),
        solved_blocks,
        blocks_total: m,
    })
}

fn solve_block(
    data: &PairData,
    block: Option<usize>,
    options: &CertifyOptions,
    observer: &mut impl FnMut(Option<usize>, &IterationRecord),
) -> Result<BlockReport> {
    let program = data.program();
    let solution = solve_traced(&program, &options.settings, |rec| observer(block, rec));
    let diagnostics = diagnostics(&solution, program.num_vars(), program.constraint_count());
    if solution.status != SolveStatus::Optimal {
        return Ok(BlockReport {
            block,
            value: None,
            verdict: None,
            witness: None,
            raw_witness_norm: None,
            diagnostics,
        });
    }

    let y = program.direction(&solution.primal).to_vec();
    let raw_norm = norm2(&y);
    let raw_value = data.value(&y);
    let (value, witness) = if raw_value < 0.0 {
        let unit: Vec<f64> = y.iter().map(|v| v / raw_norm).collect();
        (data.value(&unit), unit)
    } else {
        (raw_value, y)
    };
    let tol = options.settings.tol_feas.max(options.settings.tol_gap);
    let verdict = decide_with_tolerance(value, raw_norm, options.eps_zero, tol)?;
    Ok(BlockReport {
        block,
        value: Some(value),
        verdict: Some(verdict),
        witness: Some(witness),
        raw_witness_norm: Some(raw_norm),
        diagnostics,
    })
}

fn diagnostics(s: &Solution, variables: usize, constraints: usize) -> SolverDiagnostics {
    SolverDiagnostics {
        status: s.status,
        iterations: s.iterations,
        objective: s.objective,
        dual_objective: s.dual_objective,
        gap: s.gap,
        primal_residual: s.primal_residual,
        dual_residual: s.dual_residual,
        variables,
        constraints,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{IntegratorSystem, TimeGrid};
    use crate::support::{support, NormExponent, UncertaintyModel};
    use approx::assert_abs_diff_eq;

    fn scalar_ball(x0: f64, k: usize) -> AgentScenario {
        let sys = IntegratorSystem::new(vec![1]).unwrap();
        let u = UncertaintyModel::norm_ball(NormExponent::Two, vec![1.0; k + 1]).unwrap();
        AgentScenario::new(sys, vec![x0], u, TimeGrid::new(1.0, k).unwrap()).unwrap()
    }

    fn box_agent(r: Vec<usize>, x0: Vec<f64>, lo: f64, hi: f64, k: usize) -> AgentScenario {
        let m = r.len();
        let sys = IntegratorSystem::new(r).unwrap();
        let u = UncertaintyModel::box_bounds(vec![vec![lo; k + 1]; m], vec![vec![hi; k + 1]; m]).unwrap();
        AgentScenario::new(sys, x0, u, TimeGrid::new(1.0, k).unwrap()).unwrap()
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide(-0.54, 1.0, 1e-6).unwrap(), Verdict::new(Decision::Disjoint, Confidence::Certified));
        assert_eq!(decide(0.0, 0.0, 1e-6).unwrap(), Verdict::new(Decision::Intersect, Confidence::Certified));
        assert_eq!(decide(-1e-9, 0.3, 1e-6).unwrap(), Verdict::new(Decision::Intersect, Confidence::NearZero));
        assert!(matches!(decide(1e-3, 0.0, 1e-6), Err(Error::Consistency(_))));
        assert!(matches!(decide(f64::NAN, 0.0, 1e-6), Err(Error::Consistency(_))));
    }

    #[test]
    fn separated_intervals_are_disjoint() {
        // [−1, 1] and [9, 11]
        let rep = certify_normball(&scalar_ball(0.0, 8), &scalar_ball(10.0, 8), &CertifyOptions::default()).unwrap();
        let v = rep.blocks[0].value.unwrap();
        assert_abs_diff_eq!(v, -8.0, epsilon = 1e-7);
        assert_eq!(rep.overall.unwrap().decision, Decision::Disjoint);
        let y = rep.separating_direction.unwrap();
        // h_A(1) + h_B(−1) = 1 − 9
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-7);
    }

    #[test]
    fn overlapping_intervals_intersect() {
        // [−1, 1] and [0.5, 2.5]
        let rep = certify_normball(&scalar_ball(0.0, 8), &scalar_ball(1.5, 8), &CertifyOptions::default()).unwrap();
        assert_abs_diff_eq!(rep.blocks[0].value.unwrap(), 0.0, epsilon = 1e-7);
        assert_eq!(rep.overall.unwrap(), Verdict::new(Decision::Intersect, Confidence::Certified));
        assert!(rep.separating_direction.is_none());
    }

    #[test]
    fn identical_boxes_intersect_everywhere() {
        let a = box_agent(vec![2, 1], vec![0.1, 0.2, 0.3], -1.0, 0.5, 10);
        let opts = CertifyOptions { shortcircuit: false, ..CertifyOptions::default() };
        let rep = certify_box(&a, &a.clone(), &opts).unwrap();
        assert_eq!(rep.blocks.len(), 2);
        for b in &rep.blocks {
            assert_abs_diff_eq!(b.value.unwrap(), 0.0, epsilon = 1e-7);
        }
        assert_eq!(rep.overall.unwrap().decision, Decision::Intersect);
        assert_abs_diff_eq!(rep.combined_value.unwrap(), 0.0, epsilon = 1e-7);
    }

    #[test]
    fn one_separated_block_decides() {
        let a = box_agent(vec![1, 2], vec![0.0, 0.0, 0.0], -1.0, 1.0, 10);
        let b = box_agent(vec![1, 2], vec![0.0, 20.0, 0.0], -1.0, 1.0, 10);
        let rep = certify_box(&a, &b, &CertifyOptions::default()).unwrap();
        assert_eq!(rep.solved_blocks, vec![0, 1]);
        assert_eq!(rep.blocks[0].verdict.unwrap().decision, Decision::Intersect);
        assert_eq!(rep.blocks[1].verdict.unwrap().decision, Decision::Disjoint);
        assert_eq!(rep.overall.unwrap().decision, Decision::Disjoint);
        let y = rep.separating_direction.unwrap();
        assert_eq!(y[0], 0.0);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        let h = support(&a, &y).unwrap() + support(&b, &neg).unwrap();
        assert!(h <= rep.blocks[1].value.unwrap() + 1e-9 && h < 0.0);

        // solving the separated block first short-circuits the other
        let opts = CertifyOptions { block_order: Some(vec![1]), ..CertifyOptions::default() };
        let rep = certify_box(&a, &b, &opts).unwrap();
        assert_eq!(rep.solved_blocks, vec![1]);
        assert!(rep.combined_value.is_none());
    }

    #[test]
    fn rejects_bad_block_order_and_mixed_kinds() {
        let a = box_agent(vec![1, 1], vec![0.0, 0.0], -1.0, 1.0, 4);
        let opts = CertifyOptions { block_order: Some(vec![2]), ..CertifyOptions::default() };
        assert!(matches!(certify_box(&a, &a, &opts), Err(Error::BlockIndex { index: 2, blocks: 2 })));
        let opts = CertifyOptions { block_order: Some(vec![1, 1]), ..CertifyOptions::default() };
        assert!(matches!(certify_box(&a, &a, &opts), Err(Error::Argument(_))));

        let sys = IntegratorSystem::new(vec![1, 1]).unwrap();
        let u = UncertaintyModel::norm_ball(NormExponent::Two, vec![1.0; 5]).unwrap();
        let ball = AgentScenario::new(sys, vec![0.0, 0.0], u, TimeGrid::new(1.0, 4).unwrap()).unwrap();
        assert!(matches!(certify(&a, &ball, &CertifyOptions::default()), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn unconverged_solves_have_no_verdict() {
        let opts = CertifyOptions {
            settings: SolverSettings { max_iters: 1, ..SolverSettings::default() },
            ..CertifyOptions::default()
        };
        let rep = certify_normball(&scalar_ball(0.0, 4), &scalar_ball(10.0, 4), &opts).unwrap();
        assert!(rep.overall.is_none());
        assert_eq!(rep.blocks[0].diagnostics.status, SolveStatus::MaxIters);
    }
}
