//! Solver-free cross-checks.
//!
//! Everything here integrates explicit admissible controls instead of using
//! the closed-form support integrals: the bang-bang maximizer for boxes, the
//! dual-norm-aligned maximizer for balls, Monte-Carlo controls, sampled reach
//! sets and a direction-sampling intersection test.
//!
//! Input bounds are linearly interpolated between grid samples. Directional
//! supports use trapezoid sums on grids 8× and 16× finer than the scenario
//! grid, combined by Richardson extrapolation; their difference is returned as
//! an error estimate. Endpoints of piecewise-constant controls are integrated
//! with Gauss-Legendre rules that are exact for the polynomial integrands
//! between breaks.
//!
//! All randomness comes from `ChaCha8Rng` seeded with an explicit seed and a
//! per-item stream, so results do not depend on evaluation order.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{dot, norm2};
use crate::model::{xi, xi_dot, AgentScenario, TimeGrid};
use crate::support::{support, NormExponent, UncertaintyKind, UncertaintyModel};
use crate::{Error, Result};

pub const DEFAULT_SEED: u64 = 0x7265_6163_6863_6572;
/// Oracle quadrature runs on grids this many times finer than the scenario's.
pub const REFINEMENT_FACTOR: usize = 8;

/// Oracle value with the Richardson error estimate `|T₁₆ − T₈|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    pub value: f64,
    pub error_estimate: f64,
}

fn rng_for(seed: u64, item: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(item);
    rng
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Linear interpolation of grid samples at time `s`.
fn interpolate(grid: &TimeGrid, samples: &[f64], s: f64) -> f64 {
    let k_max = grid.steps();
    let x = (s / grid.step()).clamp(0.0, k_max as f64);
    let k = (libm::floor(x) as usize).min(k_max - 1);
    let frac = x - k as f64;
    samples[k] * (1.0 - frac) + samples[k + 1] * frac
}

/// Richardson-extrapolated trapezoid integral of `f` over `[0, t]`.
fn fine_integral(grid: &TimeGrid, mut f: impl FnMut(f64) -> f64) -> OracleValue {
    let nodes = 2 * REFINEMENT_FACTOR * grid.steps();
    let t = grid.horizon();
    let h = t / nodes as f64;
    let (mut t16, mut t8) = (0.0, 0.0);
    for i in 0..=nodes {
        let s = if i == nodes { t } else { i as f64 * h };
        let v = f(s);
        let end = i == 0 || i == nodes;
        t16 += if end { 0.5 * v } else { v };
        if i % 2 == 0 {
            t8 += if end { 0.5 * v } else { v };
        }
    }
    t16 *= h;
    t8 *= 2.0 * h;
    OracleValue { value: (4.0 * t16 - t8) / 3.0, error_estimate: libm::fabs(t16 - t8) }
}

fn kind_error(expected: UncertaintyKind, sc: &AgentScenario) -> Error {
    Error::KindMismatch { expected: expected.name(), found: sc.uncertainty().kind().name() }
}

/// Bang-bang input `α + (β − α) H(g)` for one block.
fn bang_bang(alpha: f64, beta: f64, g: f64) -> f64 {
    if g >= 0.0 {
        beta
    } else {
        alpha
    }
}

fn box_block_eval(sc: &AgentScenario, j: usize, y_j: &[f64]) -> Result<OracleValue> {
    let UncertaintyModel::Box { alpha, beta } = sc.uncertainty() else {
        return Err(kind_error(UncertaintyKind::Box, sc));
    };
    let range = sc.system().block_range(j)?;
    let r = range.len();
    if y_j.len() != r {
        return Err(Error::Argument(format!("block direction has length {}, expected {r}", y_j.len())));
    }
    let grid = sc.grid();
    let (a, b) = (&alpha[j], &beta[j]);
    let mut v = fine_integral(grid, |s| {
        let g = xi_dot(r, s, y_j);
        g * bang_bang(interpolate(grid, a, s), interpolate(grid, b, s), g)
    });
    let x_t = sc.system().propagate(grid.horizon(), sc.x0());
    v.value += dot(y_j, &x_t[range]);
    Ok(v)
}

/// Support of block `j` of a box reach set, integrating the bang-bang
/// maximizer explicitly.
pub fn oracle_support_box(sc: &AgentScenario, j: usize, y_j: &[f64]) -> Result<f64> {
    Ok(box_block_eval(sc, j, y_j)?.value)
}

/// Dual-aligned element of the unit `p`-ball: maximizes `⟨z, v⟩`.
pub fn dual_aligned(p: NormExponent, z: &[f64]) -> Vec<f64> {
    let sign = |v: f64| if v > 0.0 { 1.0 } else if v < 0.0 { -1.0 } else { 0.0 };
    match p {
        NormExponent::Two => {
            let n = norm2(z);
            if n > 0.0 {
                z.iter().map(|v| v / n).collect()
            } else {
                vec![0.0; z.len()]
            }
        }
        NormExponent::One => {
            let mut out = vec![0.0; z.len()];
            if let Some((i, _)) = z.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())) {
                out[i] = sign(z[i]);
            }
            out
        }
        NormExponent::Infinity => z.iter().map(|v| sign(*v)).collect(),
    }
}

fn ball_parts(sc: &AgentScenario) -> Result<(NormExponent, &[f64])> {
    match sc.uncertainty() {
        UncertaintyModel::NormBall { p, ell } => Ok((*p, ell)),
        UncertaintyModel::Box { .. } => Err(kind_error(UncertaintyKind::NormBall, sc)),
    }
}

fn check_direction(sc: &AgentScenario, y: &[f64]) -> Result<()> {
    if y.len() != sc.system().n() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument(format!("direction must be {} finite values", sc.system().n())));
    }
    Ok(())
}

/// Ball support by integrating `⟨z(s), u(s)⟩` for the per-time maximizer
/// `u(s) = ℓ(s) v(s)`, `z(s) = (exp(sA)B)ᵀ y`.
fn ball_eval(sc: &AgentScenario, y: &[f64]) -> Result<OracleValue> {
    let (p, ell) = ball_parts(sc)?;
    check_direction(sc, y)?;
    let grid = sc.grid();
    let sys = sc.system();
    let mut v = fine_integral(grid, |s| {
        let z = sys.input_gain(s, y);
        let u = dual_aligned(p, &z);
        interpolate(grid, ell, s) * dot(&z, &u)
    });
    v.value += dot(y, &sc.propagate_initial());
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallOracle {
    /// Integral of the dual-aligned maximizer.
    pub value: f64,
    /// Best value over the random admissible controls; never above `value`.
    pub monte_carlo: f64,
}

/// Ball support from the dual-aligned maximizer, with a Monte-Carlo lower
/// bound from `samples` random admissible controls.
pub fn oracle_support_ball(sc: &AgentScenario, y: &[f64], samples: usize, seed: u64) -> Result<BallOracle> {
    let value = ball_eval(sc, y)?.value;
    let (p, ell) = ball_parts(sc)?;
    let grid = sc.grid();
    let sys = sc.system();
    let m = sys.m();
    let segments = grid.steps().min(8);
    let base = dot(y, &sc.propagate_initial());
    let mut best = f64::NEG_INFINITY;
    for item in 0..samples {
        let mut rng = rng_for(seed, item as u64);
        let dirs: Vec<Vec<f64>> = (0..segments).map(|_| random_ball_point(&mut rng, p, m, true)).collect();
        let t = grid.horizon();
        let v = fine_integral(grid, |s| {
            let seg = ((s / t * segments as f64) as usize).min(segments - 1);
            interpolate(grid, ell, s) * dot(&sys.input_gain(s, y), &dirs[seg])
        });
        best = best.max(base + v.value);
    }
    Ok(BallOracle { value, monte_carlo: best })
}

/// Oracle support in either kind, with its quadrature error estimate.
pub fn oracle_support(sc: &AgentScenario, y: &[f64]) -> Result<OracleValue> {
    match sc.uncertainty().kind() {
        UncertaintyKind::NormBall => ball_eval(sc, y),
        UncertaintyKind::Box => {
            check_direction(sc, y)?;
            let sys = sc.system();
            let mut total = OracleValue { value: 0.0, error_estimate: 0.0 };
            for j in 0..sys.m() {
                let v = box_block_eval(sc, j, &y[sys.block_range(j)?])?;
                total.value += v.value;
                total.error_estimate += v.error_estimate;
            }
            Ok(total)
        }
    }
}

/// Point of the unit `p`-ball: an extreme point, or a random interior point.
fn random_ball_point(rng: &mut ChaCha8Rng, p: NormExponent, m: usize, extreme: bool) -> Vec<f64> {
    let mut v = match (p, extreme) {
        (NormExponent::One, true) => {
            let mut v = vec![0.0; m];
            v[rng.random_range(0..m)] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            v
        }
        (NormExponent::Infinity, true) => (0..m).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect(),
        _ => {
            let g = gaussian_vector(rng, m);
            let n = p.norm(&g);
            g.iter().map(|x| x / n).collect()
        }
    };
    if !extreme {
        let radius = libm::pow(rng.random::<f64>(), 1.0 / m as f64);
        v.iter_mut().for_each(|x| *x *= radius);
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleVerdict {
    Intersect,
    Disjoint,
    Inconclusive,
}

impl OracleVerdict {
    pub fn name(self) -> &'static str {
        match self {
            Self::Intersect => "intersect",
            Self::Disjoint => "disjoint",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSettings {
    pub directions: usize,
    /// Rounds of local perturbation around the best sampled direction.
    pub refinement: usize,
    /// Values within `margin` (plus the quadrature band) of zero are
    /// inconclusive.
    pub margin: f64,
    pub seed: u64,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self { directions: 2048, refinement: 64, margin: 1e-6, seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDecision {
    pub verdict: OracleVerdict,
    /// Smallest sampled `h_A(y) + h_B(−y)`.
    pub min_value: f64,
    pub argmin: Vec<f64>,
    /// Discretization band around zero: twice the gap between the oracle and
    /// the grid quadrature at the minimizer, plus twice the Richardson
    /// estimate.
    pub band: f64,
    pub evaluations: usize,
}

/// Unit directions: ±1 in 1-D, uniform angles in 2-D, a Fibonacci lattice in
/// 3-D and normalized Gaussians above, plus the coordinate axes.
pub fn sphere_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(count + 2 * n);
    match n {
        0 => return out,
        1 => {}
        2 => out.extend((0..count).map(|i| {
            let a = 2.0 * PI * i as f64 / count as f64;
            vec![libm::cos(a), libm::sin(a)]
        })),
        3 => {
            let golden = PI * (3.0 - libm::sqrt(5.0));
            out.extend((0..count).map(|i| {
                let z = 1.0 - (2 * i + 1) as f64 / count as f64;
                let r = libm::sqrt(1.0 - z * z);
                let phi = golden * i as f64;
                vec![r * libm::cos(phi), r * libm::sin(phi), z]
            }));
        }
        _ => out.extend((0..count).map(|i| {
            let g = gaussian_vector(&mut rng_for(seed, i as u64), n);
            let norm = norm2(&g);
            g.iter().map(|v| v / norm).collect()
        })),
    }
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            out.push(e);
        }
    }
    out
}

fn pair_eval(a: &AgentScenario, b: &AgentScenario, y: &[f64]) -> Result<OracleValue> {
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    let va = oracle_support(a, y)?;
    let vb = oracle_support(b, &neg)?;
    Ok(OracleValue { value: va.value + vb.value, error_estimate: va.error_estimate + vb.error_estimate })
}

/// Searches the unit sphere for a direction with `h_A(y) + h_B(−y) < 0`.
pub fn oracle_decide(a: &AgentScenario, b: &AgentScenario, settings: &OracleSettings) -> Result<OracleDecision> {
    let n = a.system().n();
    if b.system().n() != n {
        return Err(Error::Pairing(format!("state dimensions differ: {n} vs {}", b.system().n())));
    }
    let mut evaluations = 0;
    let mut best: Option<(f64, Vec<f64>)> = None;
    for y in sphere_directions(n, settings.directions, settings.seed) {
        let v = pair_eval(a, b, &y)?.value;
        evaluations += 1;
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, y));
        }
    }
    let (mut best_value, mut best_y) = best.expect("at least the axes are sampled");

    if n > 1 {
        let mut step = 2.0 / libm::sqrt(settings.directions.max(1) as f64);
        let stream_base = settings.directions as u64 + 1;
        for round in 0..settings.refinement {
            let mut rng = rng_for(settings.seed, stream_base + round as u64);
            let mut d = gaussian_vector(&mut rng, n);
            let along = dot(&d, &best_y);
            d.iter_mut().zip(&best_y).for_each(|(di, yi)| *di -= along * yi);
            let dn = norm2(&d);
            if dn == 0.0 {
                continue;
            }
            let mut improved = false;
            for sign in [1.0, -1.0] {
                let mut y: Vec<f64> = best_y.iter().zip(&d).map(|(yi, di)| yi + sign * step * di / dn).collect();
                let yn = norm2(&y);
                y.iter_mut().for_each(|v| *v /= yn);
                let v = pair_eval(a, b, &y)?.value;
                evaluations += 1;
                if v < best_value {
                    best_value = v;
                    best_y = y;
                    improved = true;
                    break;
                }
            }
            if !improved {
                step *= 0.7;
            }
        }
    }

    let at_min = pair_eval(a, b, &best_y)?;
    let neg: Vec<f64> = best_y.iter().map(|v| -v).collect();
    let grid_value = support(a, &best_y)? + support(b, &neg)?;
    let band = 2.0 * libm::fabs(at_min.value - grid_value) + 2.0 * at_min.error_estimate;
    let threshold = settings.margin + band;
    let verdict = if best_value < -threshold {
        OracleVerdict::Disjoint
    } else if best_value > threshold {
        OracleVerdict::Intersect
    } else {
        OracleVerdict::Inconclusive
    };
    Ok(OracleDecision { verdict, min_value: best_value, argmin: best_y, band, evaluations })
}

/// Piecewise-constant control: `values[i]` holds on
/// `[boundaries[i], boundaries[i + 1])`.
///
/// For box scenarios a value is a vector of fractions `λ ∈ [0, 1]ᵐ` giving
/// `u = α + λ(β − α)`; for norm balls it is a point `v` of the unit `p`-ball
/// giving `u = ℓ v`. Either way the control is admissible at every time.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProfile {
    pub boundaries: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl ControlProfile {
    /// Constant control over `[0, t]`.
    pub fn constant(horizon: f64, value: Vec<f64>) -> Self {
        Self { boundaries: vec![0.0, horizon], values: vec![value] }
    }

    fn check(&self, sc: &AgentScenario) -> Result<()> {
        let t = sc.grid().horizon();
        let m = sc.system().m();
        let bad = |msg: &str| Err(Error::Argument(format!("control profile: {msg}")));
        if self.boundaries.len() != self.values.len() + 1 || self.values.is_empty() {
            return bad("needs one more boundary than values");
        }
        if self.boundaries[0] != 0.0 || self.boundaries[self.values.len()] != t {
            return bad("boundaries must start at 0 and end at the horizon");
        }
        if self.boundaries.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("boundaries must be strictly increasing");
        }
        for v in &self.values {
            if v.len() != m {
                return bad("value has the wrong input dimension");
            }
            let ok = match sc.uncertainty() {
                UncertaintyModel::Box { .. } => v.iter().all(|x| (0.0..=1.0).contains(x)),
                UncertaintyModel::NormBall { p, .. } => p.norm(v) <= 1.0 + 1e-12,
            };
            if !ok {
                return bad("value is not admissible");
            }
        }
        Ok(())
    }

    fn input(&self, sc: &AgentScenario, segment: usize, s: f64) -> Vec<f64> {
        let grid = sc.grid();
        let v = &self.values[segment];
        match sc.uncertainty() {
            UncertaintyModel::Box { alpha, beta } => v
                .iter()
                .enumerate()
                .map(|(j, lam)| {
                    let lo = interpolate(grid, &alpha[j], s);
                    lo + lam * (interpolate(grid, &beta[j], s) - lo)
                })
                .collect(),
            UncertaintyModel::NormBall { ell, .. } => {
                let l = interpolate(grid, ell, s);
                v.iter().map(|x| l * x).collect()
            }
        }
    }
}

/// Gauss-Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = libm::cos(PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Exact for polynomial degree up to 23: `ξ` has degree ≤ 19 and the
/// interpolated input is linear between breaks.
const GAUSS_POINTS: usize = 12;

/// `x(t) = exp(tA) x0 + ∫ exp(sA) B u(s) ds` for a piecewise-constant profile.
pub fn endpoint(sc: &AgentScenario, profile: &ControlProfile) -> Result<Vec<f64>> {
    profile.check(sc)?;
    let grid = sc.grid();
    let sys = sc.system();
    let mut breaks: Vec<f64> = grid.breakpoints().chain(profile.boundaries.iter().copied()).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let (gx, gw) = gauss_legendre(GAUSS_POINTS);
    let mut x = sc.propagate_initial();
    let mut segment = 0;
    for piece in breaks.windows(2) {
        let (lo, hi) = (piece[0], piece[1]);
        let mid = 0.5 * (lo + hi);
        while segment + 1 < profile.values.len() && mid >= profile.boundaries[segment + 1] {
            segment += 1;
        }
        let half = 0.5 * (hi - lo);
        for (xg, wg) in gx.iter().zip(&gw) {
            let s = mid + half * xg;
            let u = profile.input(sc, segment, s);
            for (j, uj) in u.iter().enumerate() {
                let range = sys.block_range(j)?;
                let r = range.len();
                for (xi_v, xk) in xi(r, s).iter().zip(&mut x[range]) {
                    *xk += half * wg * uj * xi_v;
                }
            }
        }
    }
    Ok(x)
}

/// Endpoint of block `j` under the bang-bang maximizer for `y_j`, a point on
/// the boundary of the block reach set up to quadrature error.
pub fn bang_bang_endpoint(sc: &AgentScenario, j: usize, y_j: &[f64]) -> Result<Vec<f64>> {
    let UncertaintyModel::Box { alpha, beta } = sc.uncertainty() else {
        return Err(kind_error(UncertaintyKind::Box, sc));
    };
    let range = sc.system().block_range(j)?;
    let r = range.len();
    if y_j.len() != r {
        return Err(Error::Argument(format!("block direction has length {}, expected {r}", y_j.len())));
    }
    let grid = sc.grid();
    let nodes = 2 * REFINEMENT_FACTOR * grid.steps();
    let h = grid.horizon() / nodes as f64;
    let (gx, gw) = gauss_legendre(GAUSS_POINTS);
    let mut x = sc.system().propagate(grid.horizon(), sc.x0())[range].to_vec();
    for i in 0..nodes {
        let mid = (i as f64 + 0.5) * h;
        for (xg, wg) in gx.iter().zip(&gw) {
            let s = mid + 0.5 * h * xg;
            let u = bang_bang(interpolate(grid, &alpha[j], s), interpolate(grid, &beta[j], s), xi_dot(r, s, y_j));
            for (xi_v, xk) in xi(r, s).iter().zip(&mut x) {
                *xk += 0.5 * h * wg * u * xi_v;
            }
        }
    }
    Ok(x)
}

/// How the controls behind a [`SampledReachSet`] were drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFamily {
    pub switches: usize,
    /// Segment boundaries shared by every control.
    pub boundaries: Vec<f64>,
    /// The constant extreme controls at the start of the list.
    pub constant_extremes: usize,
    pub direction_aligned: usize,
    pub random_extreme: usize,
    pub random_interior: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledReachSet {
    pub points: Vec<Vec<f64>>,
    pub controls_meta: ControlFamily,
}

/// Endpoints of `controls` piecewise-constant controls with `switches`
/// uniformly spaced switch times.
///
/// Controls 0 and 1 are constant: all inputs at their upper bound (box) or
/// along `+e₁` (ball), then the opposite. The rest cycle through
/// direction-aligned extremes (the maximizer for a random direction, frozen
/// at each segment midpoint), random extreme points and random interior
/// points.
pub fn sample_reach_set(sc: &AgentScenario, controls: usize, switches: usize, seed: u64) -> Result<SampledReachSet> {
    if controls == 0 {
        return Err(Error::Argument("at least one control is required".into()));
    }
    let t = sc.grid().horizon();
    let sys = sc.system();
    let m = sys.m();
    let segments = switches + 1;
    let boundaries: Vec<f64> =
        (0..=segments).map(|i| if i == segments { t } else { t * i as f64 / segments as f64 }).collect();
    let mids: Vec<f64> = boundaries.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let is_box = sc.uncertainty().kind() == UncertaintyKind::Box;
    let p = match sc.uncertainty() {
        UncertaintyModel::NormBall { p, .. } => *p,
        UncertaintyModel::Box { .. } => NormExponent::Infinity,
    };

    let mut meta = ControlFamily {
        switches,
        boundaries: boundaries.clone(),
        constant_extremes: 0,
        direction_aligned: 0,
        random_extreme: 0,
        random_interior: 0,
        seed,
    };
    let mut points = Vec::with_capacity(controls);
    for item in 0..controls {
        let mut rng = rng_for(seed, item as u64);
        let values: Vec<Vec<f64>> = match item {
            0 | 1 => {
                meta.constant_extremes += 1;
                let hi = item == 0;
                let v = if is_box {
                    vec![if hi { 1.0 } else { 0.0 }; m]
                } else {
                    let mut e = vec![0.0; m];
                    e[0] = if hi { 1.0 } else { -1.0 };
                    e
                };
                vec![v; segments]
            }
            _ => match item % 3 {
                2 => {
                    meta.direction_aligned += 1;
                    let y = gaussian_vector(&mut rng, sys.n());
                    mids.iter()
                        .map(|&s| {
                            let z = sys.input_gain(s, &y);
                            if is_box {
                                z.iter().map(|g| if *g >= 0.0 { 1.0 } else { 0.0 }).collect()
                            } else {
                                dual_aligned(p, &z)
                            }
                        })
                        .collect()
                }
                0 => {
                    meta.random_extreme += 1;
                    (0..segments)
                        .map(|_| {
                            if is_box {
                                (0..m).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect()
                            } else {
                                random_ball_point(&mut rng, p, m, true)
                            }
                        })
                        .collect()
                }
                _ => {
                    meta.random_interior += 1;
                    (0..segments)
                        .map(|_| {
                            if is_box {
                                (0..m).map(|_| rng.random::<f64>()).collect()
                            } else {
                                random_ball_point(&mut rng, p, m, false)
                            }
                        })
                        .collect()
                }
            },
        };
        let profile = ControlProfile { boundaries: boundaries.clone(), values };
        points.push(endpoint(sc, &profile)?);
    }
    Ok(SampledReachSet { points, controls_meta: meta })
}
