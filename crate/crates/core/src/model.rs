//! Integrator systems, time grids and the closed-form state transition.
//!
//! Block indices are zero-based throughout the library API. The command line
//! and the JSON reports present them one-based.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{power_over_factorial, Matrix};
use crate::support::UncertaintyModel;

/// Largest accepted relative degree. Beyond this the entries of `ξ_j(s)`
/// leave any useful dynamic range for `s > 1`.
pub const MAX_RELATIVE_DEGREE: usize = 20;

/// A chain-of-integrators system `ẋ = A x + B u` in Brunovsky normal form.
///
/// `A = bldiag(A_1, …, A_m)` with each `A_j` the `r_j × r_j` upper shift and
/// `B = bldiag(b_1, …, b_m)` with `b_j` the last standard basis vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntegratorSystem {
    relative_degrees: Vec<usize>,
    offsets: Vec<usize>,
    n: usize,
}

impl IntegratorSystem {
    pub fn new(relative_degrees: Vec<usize>) -> Result<Self> {
        if relative_degrees.is_empty() {
            return Err(Error::Argument("relative degree vector is empty".into()));
        }
        if let Some(&r) = relative_degrees.iter().find(|&&r| r == 0 || r > MAX_RELATIVE_DEGREE) {
            return Err(Error::Argument(format!(
                "relative degree {r} outside 1..={MAX_RELATIVE_DEGREE}"
            )));
        }
        let mut offsets = Vec::with_capacity(relative_degrees.len());
        let mut n = 0;
        for &r in &relative_degrees {
            offsets.push(n);
            n += r;
        }
        Ok(Self { relative_degrees, offsets, n })
    }

    pub fn relative_degrees(&self) -> &[usize] {
        &self.relative_degrees
    }

    /// Total state dimension `n = Σ r_j`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of inputs (blocks).
    pub fn m(&self) -> usize {
        self.relative_degrees.len()
    }

    pub fn block_dim(&self, j: usize) -> Result<usize> {
        self.check_block(j)?;
        Ok(self.relative_degrees[j])
    }

    /// Coordinates of block `j` inside the full state vector.
    pub fn block_range(&self, j: usize) -> Result<Range<usize>> {
        self.check_block(j)?;
        Ok(self.offsets[j]..self.offsets[j] + self.relative_degrees[j])
    }

    fn check_block(&self, j: usize) -> Result<()> {
        if j < self.m() {
            Ok(())
        } else {
            Err(Error::BlockIndex { index: j, blocks: self.m() })
        }
    }

    pub fn drift_matrix(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for (&off, &r) in self.offsets.iter().zip(&self.relative_degrees) {
            for i in 0..r.saturating_sub(1) {
                a[(off + i, off + i + 1)] = 1.0;
            }
        }
        a
    }

    pub fn input_matrix(&self) -> Matrix {
        let mut b = Matrix::zeros(self.n, self.m());
        for (j, (&off, &r)) in self.offsets.iter().zip(&self.relative_degrees).enumerate() {
            b[(off + r - 1, j)] = 1.0;
        }
        b
    }

    /// `ξ_j(s) = (s^{r_j−1}/(r_j−1)!, …, s, 1)ᵀ = exp(s A_j) b_j`.
    pub fn xi_vector(&self, j: usize, s: f64) -> Result<Vec<f64>> {
        let r = self.block_dim(j)?;
        Ok(xi(r, s))
    }

    /// `exp(s A_j)`: upper triangular with entry `(a, b) = s^{b−a}/(b−a)!`.
    pub fn block_transition(&self, j: usize, s: f64) -> Result<Matrix> {
        let r = self.block_dim(j)?;
        Ok(block_exp(r, s))
    }

    /// `exp(s A) = bldiag(exp(s A_1), …, exp(s A_m))`.
    pub fn state_transition(&self, s: f64) -> Matrix {
        let mut out = Matrix::zeros(self.n, self.n);
        for (&off, &r) in self.offsets.iter().zip(&self.relative_degrees) {
            out.set_block(off, off, &block_exp(r, s));
        }
        out
    }

    /// `exp(s A) x`, computed blockwise.
    pub fn propagate(&self, s: f64, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "state has wrong dimension");
        let mut out = vec![0.0; self.n];
        for (&off, &r) in self.offsets.iter().zip(&self.relative_degrees) {
            let xb = &x[off..off + r];
            for a in 0..r {
                out[off + a] = (a..r).map(|b| power_over_factorial(s, b - a) * xb[b]).sum();
            }
        }
        out
    }

    /// `(exp(sA)B)ᵀ y`, whose j-th entry is `⟨y_j, ξ_j(s)⟩`.
    pub fn input_gain(&self, s: f64, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.n, "direction has wrong dimension");
        self.offsets
            .iter()
            .zip(&self.relative_degrees)
            .map(|(&off, &r)| xi_dot(r, s, &y[off..off + r]))
            .collect()
    }
}

pub(crate) fn xi(r: usize, s: f64) -> Vec<f64> {
    (0..r).map(|a| power_over_factorial(s, r - 1 - a)).collect()
}

/// `⟨y, ξ(s)⟩` for a block of dimension `y.len()`.
pub(crate) fn xi_dot(r: usize, s: f64, y: &[f64]) -> f64 {
    debug_assert_eq!(y.len(), r);
    // Horner in s with the factorials folded in, last entry pairs with 1
    let mut acc = 0.0;
    for (p, &yp) in y.iter().rev().enumerate() {
        acc += yp * power_over_factorial(s, p);
    }
    acc
}

fn block_exp(r: usize, s: f64) -> Matrix {
    let mut m = Matrix::zeros(r, r);
    for a in 0..r {
        for b in a..r {
            m[(a, b)] = power_over_factorial(s, b - a);
        }
    }
    m
}

/// Uniform discretization of `[0, t]` into `K` intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Grid(format!("horizon must be positive and finite, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::Grid("at least one interval is required".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Number of intervals `K`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of breakpoints `K + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `Δs = t / K`
    pub fn step(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `s_k = k Δs`, with the last breakpoint pinned to `t` exactly.
    pub fn breakpoint(&self, k: usize) -> f64 {
        debug_assert!(k <= self.steps);
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.step()
        }
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|k| self.breakpoint(k))
    }

    /// Trapezoid weights `Δs (1/2, 1, …, 1, 1/2)`.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let ds = self.step();
        let mut w = vec![ds; self.steps + 1];
        w[0] = 0.5 * ds;
        w[self.steps] = 0.5 * ds;
        w
    }

    /// Same horizon with `factor` times as many intervals.
    pub fn refined(&self, factor: usize) -> Self {
        assert!(factor >= 1);
        Self { horizon: self.horizon, steps: self.steps * factor }
    }
}

/// One agent: its dynamics, initial state, input uncertainty and the time
/// grid the uncertainty is sampled on.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentScenario {
    system: IntegratorSystem,
    x0: Vec<f64>,
    uncertainty: UncertaintyModel,
    grid: TimeGrid,
}

impl AgentScenario {
    /// Validated constructor. Norm-ball bounds must be strictly positive.
    pub fn new(
        system: IntegratorSystem,
        x0: Vec<f64>,
        uncertainty: UncertaintyModel,
        grid: TimeGrid,
    ) -> Result<Self> {
        Self::build(system, x0, uncertainty, grid, true)
    }

    /// Like [`AgentScenario::new`] but admits `ℓ ≡ 0`, i.e. a singleton input
    /// set. Useful for degenerate test instances.
    pub fn new_relaxed(
        system: IntegratorSystem,
        x0: Vec<f64>,
        uncertainty: UncertaintyModel,
        grid: TimeGrid,
    ) -> Result<Self> {
        Self::build(system, x0, uncertainty, grid, false)
    }

    fn build(
        system: IntegratorSystem,
        x0: Vec<f64>,
        uncertainty: UncertaintyModel,
        grid: TimeGrid,
        strict: bool,
    ) -> Result<Self> {
        if x0.len() != system.n() {
            return Err(Error::Scenario(format!(
                "initial state has length {}, expected n = {}",
                x0.len(),
                system.n()
            )));
        }
        if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
            return Err(Error::Scenario(format!("initial state entry {i} is not finite")));
        }
        uncertainty.validate(system.m(), grid.len(), strict)?;
        Ok(Self { system, x0, uncertainty, grid })
    }

    pub fn system(&self) -> &IntegratorSystem {
        &self.system
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn uncertainty(&self) -> &UncertaintyModel {
        &self.uncertainty
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// `exp(tA) x0`
    pub fn propagate_initial(&self) -> Vec<f64> {
        self.system.propagate(self.grid.horizon(), &self.x0)
    }

    /// Same agent with a different uncertainty model on the same grid.
    pub fn with_uncertainty(&self, uncertainty: UncertaintyModel) -> Result<Self> {
        Self::new_relaxed(self.system.clone(), self.x0.clone(), uncertainty, self.grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::support::NormExponent;
    use approx::assert_abs_diff_eq;

    fn dense_expm(a: &Matrix, s: f64) -> Matrix {
        // scaling and squaring with a 20-term Taylor series
        let n = a.rows();
        let mut scale = 0;
        let mut norm = a.max_abs() * s.abs() * n as f64;
        while norm > 0.5 {
            norm /= 2.0;
            scale += 1;
        }
        let h = s / (1u64 << scale) as f64;
        let mut term = Matrix::identity(n);
        let mut sum = Matrix::identity(n);
        for k in 1..=20 {
            term = term.matmul(a);
            let mut t = term.clone();
            for i in 0..n {
                for j in 0..n {
                    t[(i, j)] *= h.powi(k) / (1..=k).map(f64::from).product::<f64>();
                }
            }
            for i in 0..n {
                for j in 0..n {
                    sum[(i, j)] += t[(i, j)];
                }
            }
        }
        for _ in 0..scale {
            sum = sum.matmul(&sum);
        }
        sum
    }

    #[test]
    fn system_rejects_bad_degrees() {
        assert!(IntegratorSystem::new(vec![]).is_err());
        assert!(IntegratorSystem::new(vec![2, 0]).is_err());
        assert!(IntegratorSystem::new(vec![21]).is_err());
        let sys = IntegratorSystem::new(vec![3, 2]).unwrap();
        assert_eq!((sys.n(), sys.m()), (5, 2));
        assert_eq!(sys.block_range(1).unwrap(), 3..5);
    }

    #[test]
    fn shift_and_input_matrices() {
        let sys = IntegratorSystem::new(vec![3, 2]).unwrap();
        let a = sys.drift_matrix();
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(a[(1, 2)], 1.0);
        assert_eq!(a[(2, 3)], 0.0);
        assert_eq!(a[(3, 4)], 1.0);
        let b = sys.input_matrix();
        assert_eq!(b[(2, 0)], 1.0);
        assert_eq!(b[(4, 1)], 1.0);
        assert_eq!(b.as_slice().iter().sum::<f64>(), 2.0);
    }

    #[test]
    fn xi_vector_examples() {
        let sys = IntegratorSystem::new(vec![3, 2]).unwrap();
        assert_eq!(sys.xi_vector(0, 0.0).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(sys.xi_vector(1, 1.0).unwrap(), vec![1.0, 1.0]);
        let v = sys.xi_vector(0, 2.0).unwrap();
        assert_abs_diff_eq!(v.as_slice(), [2.0, 2.0, 1.0].as_slice(), epsilon = 1e-15);
        // cross-check against a numerical matrix exponential applied to b_1
        let e = dense_expm(&sys.drift_matrix(), 2.0);
        let b = sys.input_matrix();
        let col = e.matmul(&b);
        for a in 0..3 {
            assert_abs_diff_eq!(col[(a, 0)], v[a], epsilon = 1e-12);
        }
        assert!(matches!(sys.xi_vector(2, 1.0), Err(Error::BlockIndex { index: 2, blocks: 2 })));
    }

    #[test]
    fn state_transition_examples() {
        let sys = IntegratorSystem::new(vec![2]).unwrap();
        let e = sys.state_transition(0.7);
        assert_eq!(e.as_slice(), &[1.0, 0.7, 0.0, 1.0]);

        let sys = IntegratorSystem::new(vec![3, 2, 1]).unwrap();
        assert_eq!(sys.state_transition(0.0), Matrix::identity(6));

        let sys = IntegratorSystem::new(vec![3]).unwrap();
        let e = sys.state_transition(1.0);
        let expected = [1.0, 1.0, 0.5, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        assert_abs_diff_eq!(e.as_slice(), expected.as_slice(), epsilon = 1e-15);
        let numeric = dense_expm(&sys.drift_matrix(), 1.0);
        assert_abs_diff_eq!(e.as_slice(), numeric.as_slice(), epsilon = 1e-12);
    }

    #[test]
    fn propagate_initial_examples() {
        let sys = IntegratorSystem::new(vec![2]).unwrap();
        let grid = TimeGrid::new(2.0, 4).unwrap();
        let u = UncertaintyModel::norm_ball(NormExponent::Two, vec![1.0; 5]).unwrap();
        let sc = AgentScenario::new(sys.clone(), vec![0.0, 1.0], u.clone(), grid).unwrap();
        assert_eq!(sc.propagate_initial(), vec![2.0, 1.0]);
        let sc = AgentScenario::new(sys, vec![0.0, 0.0], u, grid).unwrap();
        assert_eq!(sc.propagate_initial(), vec![0.0, 0.0]);

        let sys = IntegratorSystem::new(vec![3, 2]).unwrap();
        let u = UncertaintyModel::norm_ball(NormExponent::Two, vec![1.0; 5]).unwrap();
        let sc = AgentScenario::new(sys, vec![0.5, 0.0, 0.0, 0.0, 0.0], u, grid).unwrap();
        assert_eq!(sc.propagate_initial(), vec![0.5, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn scenario_validation() {
        let sys = IntegratorSystem::new(vec![2]).unwrap();
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let u = UncertaintyModel::norm_ball(NormExponent::Two, vec![1.0; 3]).unwrap();
        assert!(AgentScenario::new(sys.clone(), vec![0.0], u.clone(), grid).is_err());
        let short = UncertaintyModel::norm_ball(NormExponent::Two, vec![1.0; 2]).unwrap();
        assert!(AgentScenario::new(sys.clone(), vec![0.0; 2], short, grid).is_err());
        let zero = UncertaintyModel::norm_ball(NormExponent::Two, vec![0.0; 3]).unwrap();
        assert!(AgentScenario::new(sys.clone(), vec![0.0; 2], zero.clone(), grid).is_err());
        assert!(AgentScenario::new_relaxed(sys, vec![0.0; 2], zero, grid).is_ok());
    }

    #[test]
    fn grid_basics() {
        assert!(TimeGrid::new(0.0, 4).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
        assert!(TimeGrid::new(f64::NAN, 3).is_err());
        let g = TimeGrid::new(2.0, 40).unwrap();
        assert_abs_diff_eq!(g.step(), 0.05, epsilon = 1e-15);
        assert_eq!(g.breakpoint(0), 0.0);
        assert_eq!(g.breakpoint(40), 2.0);
        let bp: Vec<f64> = g.breakpoints().collect();
        assert!(bp.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn input_gain_matches_dense_product() {
        let sys = IntegratorSystem::new(vec![3, 1, 2]).unwrap();
        let y = [0.3, -1.2, 0.7, 2.0, -0.4, 0.9];
        let s = 1.3;
        let eb = sys.state_transition(s).matmul(&sys.input_matrix());
        let dense = eb.tr_mul_vec(&y);
        let fast = sys.input_gain(s, &y);
        assert_abs_diff_eq!(dense.as_slice(), fast.as_slice(), epsilon = 1e-13);
    }
}
