//! Input uncertainty models and the closed-form support functions of the
//! resulting integrator reach sets.
//!
//! For an input set trajectory `U(s)` the reach set support function is
//!
//! ```text
//! h(y) = ⟨y, exp(tA) x0⟩ + ∫₀ᵗ h_{U(s)}((exp(sA)B)ᵀ y) ds
//! ```
//!
//! which for a `p`-norm ball of radius `ℓ(s)` becomes `ℓ(s) ‖·‖_q` with `q`
//! the Hölder conjugate, and for a box `[α(s), β(s)]` splits across blocks
//! into `ν_j⟨y_j, ξ_j⟩ + μ_j|⟨y_j, ξ_j⟩|`. Uncertainties are sampled on the
//! breakpoints of the scenario grid and the integral is the trapezoid rule on
//! that grid, the same rule the cone programs use.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm1, norm2, norm_inf};
use crate::model::{xi_dot, AgentScenario};

/// Norm exponents with an exact linear or second-order cone representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormExponent {
    One,
    Two,
    Infinity,
}

impl NormExponent {
    pub fn from_f64(p: f64) -> Result<Self> {
        if p == 1.0 {
            Ok(Self::One)
        } else if p == 2.0 {
            Ok(Self::Two)
        } else if p == f64::INFINITY {
            Ok(Self::Infinity)
        } else {
            Err(Error::UnsupportedNorm(p))
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Two => 2.0,
            Self::Infinity => f64::INFINITY,
        }
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Self {
        match self {
            Self::One => Self::Infinity,
            Self::Two => Self::Two,
            Self::Infinity => Self::One,
        }
    }

    pub fn norm(self, v: &[f64]) -> f64 {
        match self {
            Self::One => norm1(v),
            Self::Two => norm2(v),
            Self::Infinity => norm_inf(v),
        }
    }
}

/// Hölder conjugate of a supported exponent given as a float.
pub fn holder_conjugate(p: f64) -> Result<NormExponent> {
    NormExponent::from_f64(p).map(NormExponent::conjugate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertaintyKind {
    NormBall,
    Box,
}

impl UncertaintyKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::NormBall => "norm_ball",
            Self::Box => "box",
        }
    }
}

/// Time-varying input set, sampled on the `K + 1` grid breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyModel {
    /// `{u : ‖u‖_p ≤ ℓ(s)}`
    NormBall { p: NormExponent, ell: Vec<f64> },
    /// `[α_1(s), β_1(s)] × … × [α_m(s), β_m(s)]`, stored as `m` rows of
    /// `K + 1` samples each.
    Box { alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>> },
}

impl UncertaintyModel {
    pub fn norm_ball(p: NormExponent, ell: Vec<f64>) -> Result<Self> {
        if let Some(k) = ell.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Scenario(format!("ell[{k}] = {} is not a finite nonnegative bound", ell[k])));
        }
        Ok(Self::NormBall { p, ell })
    }

    pub fn box_bounds(alpha: Vec<Vec<f64>>, beta: Vec<Vec<f64>>) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::Scenario(format!(
                "alpha has {} rows but beta has {}",
                alpha.len(),
                beta.len()
            )));
        }
        for (j, (a, b)) in alpha.iter().zip(&beta).enumerate() {
            if a.len() != b.len() {
                return Err(Error::Scenario(format!("block {j}: alpha and beta lengths differ")));
            }
            for (k, (lo, hi)) in a.iter().zip(b).enumerate() {
                if !(lo.is_finite() && hi.is_finite()) {
                    return Err(Error::Scenario(format!("block {j}, sample {k}: bound not finite")));
                }
                if lo > hi {
                    return Err(Error::Scenario(format!(
                        "block {j}, sample {k}: alpha {lo} exceeds beta {hi}"
                    )));
                }
            }
        }
        Ok(Self::Box { alpha, beta })
    }

    pub fn kind(&self) -> UncertaintyKind {
        match self {
            Self::NormBall { .. } => UncertaintyKind::NormBall,
            Self::Box { .. } => UncertaintyKind::Box,
        }
    }

    /// Checks sample counts against `m` inputs and `samples` breakpoints.
    /// With `strict`, norm-ball radii must be strictly positive.
    pub fn validate(&self, m: usize, samples: usize, strict: bool) -> Result<()> {
        match self {
            Self::NormBall { ell, .. } => {
                if ell.len() != samples {
                    return Err(Error::Scenario(format!(
                        "ell has {} samples, expected {samples}",
                        ell.len()
                    )));
                }
                if strict {
                    if let Some(k) = ell.iter().position(|v| *v <= 0.0) {
                        return Err(Error::Scenario(format!("ell[{k}] must be strictly positive")));
                    }
                }
            }
            Self::Box { alpha, beta } => {
                if alpha.len() != m || beta.len() != m {
                    return Err(Error::Scenario(format!(
                        "box bounds have {} rows, expected m = {m}",
                        alpha.len()
                    )));
                }
                for (j, (a, b)) in alpha.iter().zip(beta).enumerate() {
                    if a.len() != samples || b.len() != samples {
                        return Err(Error::Scenario(format!(
                            "block {j}: box bounds need {samples} samples"
                        )));
                    }
                    if let Some(k) = a.iter().zip(b).position(|(lo, hi)| lo > hi) {
                        return Err(Error::Scenario(format!(
                            "block {j}, sample {k}: alpha exceeds beta"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Half-widths and centers of a box model; `None` for a norm ball.
    pub fn box_derived(&self) -> Option<BoxDerived> {
        match self {
            Self::Box { alpha, beta } => Some(BoxDerived::new(alpha, beta)),
            Self::NormBall { .. } => None,
        }
    }
}

/// `μ_j = (β_j − α_j)/2` and `ν_j = (β_j + α_j)/2` per block and breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDerived {
    pub mu: Vec<Vec<f64>>,
    pub nu: Vec<Vec<f64>>,
}

impl BoxDerived {
    fn new(alpha: &[Vec<f64>], beta: &[Vec<f64>]) -> Self {
        let zip = |f: fn(f64, f64) -> f64| -> Vec<Vec<f64>> {
            alpha
                .iter()
                .zip(beta)
                .map(|(a, b)| a.iter().zip(b).map(|(&lo, &hi)| f(lo, hi)).collect())
                .collect()
        };
        Self { mu: zip(|lo, hi| 0.5 * (hi - lo)), nu: zip(|lo, hi| 0.5 * (hi + lo)) }
    }
}

fn kind_error(expected: UncertaintyKind, sc: &AgentScenario) -> Error {
    Error::KindMismatch { expected: expected.name(), found: sc.uncertainty().kind().name() }
}

fn check_direction(sc: &AgentScenario, y: &[f64]) -> Result<()> {
    if y.len() != sc.system().n() {
        return Err(Error::Argument(format!(
            "direction has length {}, expected n = {}",
            y.len(),
            sc.system().n()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("direction is not finite".into()));
    }
    Ok(())
}

/// Support function of a norm-ball reach set,
/// `⟨y, exp(tA)x0⟩ + ∫ ℓ(s) ‖(exp(sA)B)ᵀ y‖_q ds` with trapezoid quadrature.
pub fn support_normball(sc: &AgentScenario, y: &[f64]) -> Result<f64> {
    let UncertaintyModel::NormBall { p, ell } = sc.uncertainty() else {
        return Err(kind_error(UncertaintyKind::NormBall, sc));
    };
    check_direction(sc, y)?;
    let q = p.conjugate();
    let grid = sc.grid();
    let weights = grid.trapezoid_weights();
    let mut integral = 0.0;
    for (k, (w, l)) in weights.iter().zip(ell).enumerate() {
        if *l != 0.0 {
            integral += w * l * q.norm(&sc.system().input_gain(grid.breakpoint(k), y));
        }
    }
    Ok(dot(y, &sc.propagate_initial()) + integral)
}

/// Support function of the `j`-th block reach set of a box scenario,
/// `⟨y_j, exp(tA_j)x_j0⟩ + ∫ [ν_j⟨y_j, ξ_j⟩ + μ_j|⟨y_j, ξ_j⟩|] ds`.
pub fn support_box_block(sc: &AgentScenario, j: usize, y_j: &[f64]) -> Result<f64> {
    let UncertaintyModel::Box { alpha, beta } = sc.uncertainty() else {
        return Err(kind_error(UncertaintyKind::Box, sc));
    };
    let range = sc.system().block_range(j)?;
    let r = range.len();
    if y_j.len() != r {
        return Err(Error::Argument(format!("block direction has length {}, expected {r}", y_j.len())));
    }
    let grid = sc.grid();
    let weights = grid.trapezoid_weights();
    let x_t = sc.system().propagate(grid.horizon(), sc.x0());
    let mut value = dot(y_j, &x_t[range]);
    for (k, w) in weights.iter().enumerate() {
        let g = xi_dot(r, grid.breakpoint(k), y_j);
        let mu = 0.5 * (beta[j][k] - alpha[j][k]);
        let nu = 0.5 * (beta[j][k] + alpha[j][k]);
        value += w * (nu * g + mu * g.abs());
    }
    Ok(value)
}

/// Support function of a box reach set: the sum of its block supports.
pub fn support_box(sc: &AgentScenario, y: &[f64]) -> Result<f64> {
    if sc.uncertainty().kind() != UncertaintyKind::Box {
        return Err(kind_error(UncertaintyKind::Box, sc));
    }
    check_direction(sc, y)?;
    let sys = sc.system();
    (0..sys.m()).map(|j| support_box_block(sc, j, &y[sys.block_range(j)?])).sum()
}

/// Support function for either uncertainty kind.
pub fn support(sc: &AgentScenario, y: &[f64]) -> Result<f64> {
    match sc.uncertainty().kind() {
        UncertaintyKind::NormBall => support_normball(sc, y),
        UncertaintyKind::Box => support_box(sc, y),
    }
}

/// Bounding box of arbitrary compact input sets, one finite point sample per
/// breakpoint. The box reach set then contains the true reach set.
pub fn box_overapproximate(samples: &[Vec<Vec<f64>>]) -> Result<UncertaintyModel> {
    let Some(first) = samples.iter().find_map(|pts| pts.first()) else {
        return Err(Error::Ingestion("no sample points".into()));
    };
    let m = first.len();
    if m == 0 {
        return Err(Error::Ingestion("sample points have dimension 0".into()));
    }
    let mut alpha = alloc::vec![Vec::with_capacity(samples.len()); m];
    let mut beta = alloc::vec![Vec::with_capacity(samples.len()); m];
    for (k, pts) in samples.iter().enumerate() {
        if pts.is_empty() {
            return Err(Error::Ingestion(format!("breakpoint {k} has no sample points")));
        }
        for j in 0..m {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for p in pts {
                if p.len() != m {
                    return Err(Error::Ingestion(format!(
                        "breakpoint {k}: point of dimension {} among dimension {m}",
                        p.len()
                    )));
                }
                if !p[j].is_finite() {
                    return Err(Error::Ingestion(format!("breakpoint {k}: non-finite coordinate")));
                }
                lo = lo.min(p[j]);
                hi = hi.max(p[j]);
            }
            alpha[j].push(lo);
            beta[j].push(hi);
        }
    }
    UncertaintyModel::box_bounds(alpha, beta)
}
