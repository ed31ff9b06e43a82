//! Second-order cone programs for the relaxed intersection test.
//!
//! For agents `A` and `B` the quantity to minimize over `‖y‖₂ ≤ 1` is
//!
//! ```text
//! h_A(y) + h_B(−y) = ⟨c, y⟩ + Σ_k ω_k ‖Γ_k y‖_q
//! ```
//!
//! where the sum is the trapezoid rule on the shared grid. [`PairData`] holds
//! `c`, the weights `ω` and the per-breakpoint kernels `Γ_k`; its
//! [`PairData::program`] lowers the epigraph form into a [`ConeProgram`] over
//! `η = (y, θ[, v])`:
//!
//! * norm balls: `Γ_k = (ℓ^A + ℓ^B)(s_k) (exp(s_k A) B)ᵀ`, an `m × n` block;
//! * boxes, block `j`: `Γ_k = (μ_j^A + μ_j^B)(s_k) ξ_j(s_k)ᵀ`, a single row,
//!   with the `ν` difference folded into `c` by the same quadrature.
//!
//! `q = 2` epigraphs become second-order cones, `q = ∞` (and the box rows)
//! become `2` linear rows per kernel row, and `q = 1` introduces one auxiliary
//! variable per kernel row plus a summing row.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::model::{xi, AgentScenario, TimeGrid};
use crate::support::{NormExponent, UncertaintyKind, UncertaintyModel};

/// Rows of `matrix · η ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRows {
    pub matrix: Matrix,
    pub rhs: Vec<f64>,
}

/// `‖matrix · η‖₂ ≤ ⟨linear, η⟩ + constant`
#[derive(Debug, Clone, PartialEq)]
pub struct SocBlock {
    pub matrix: Matrix,
    pub linear: Vec<f64>,
    pub constant: f64,
}

/// Where the pieces of the decision vector live.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub direction: Range<usize>,
    pub epigraph: Range<usize>,
    pub auxiliary: Range<usize>,
}

/// `min ⟨objective, η⟩` subject to linear rows and second-order cones.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeProgram {
    pub objective: Vec<f64>,
    pub linear: LinearRows,
    pub soc: Vec<SocBlock>,
    pub layout: Layout,
}

impl ConeProgram {
    /// Assembles a program and checks that every constraint has the width of
    /// the objective.
    pub fn new(objective: Vec<f64>, linear: LinearRows, soc: Vec<SocBlock>, layout: Layout) -> Result<Self> {
        let n = objective.len();
        if linear.matrix.cols() != n || linear.matrix.rows() != linear.rhs.len() {
            return Err(Error::Argument(format!(
                "linear rows are {}x{} with {} right-hand sides for {n} variables",
                linear.matrix.rows(),
                linear.matrix.cols(),
                linear.rhs.len()
            )));
        }
        for (i, c) in soc.iter().enumerate() {
            if c.matrix.cols() != n || c.linear.len() != n {
                return Err(Error::Argument(format!("cone {i} does not match {n} variables")));
            }
        }
        if soc.is_empty() {
            return Err(Error::Argument("program needs at least one second-order cone".into()));
        }
        if layout.direction.end > n || layout.epigraph.end > n || layout.auxiliary.end > n {
            return Err(Error::Argument("layout exceeds the decision vector".into()));
        }
        Ok(Self { objective, linear, soc, layout })
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Linear rows plus cone blocks.
    pub fn constraint_count(&self) -> usize {
        self.linear.rhs.len() + self.soc.len()
    }

    pub fn objective_value(&self, eta: &[f64]) -> f64 {
        dot(&self.objective, eta)
    }

    /// The direction part `y` of a decision vector.
    pub fn direction<'a>(&self, eta: &'a [f64]) -> &'a [f64] {
        &eta[self.layout.direction.clone()]
    }

    /// Largest constraint violation of `eta` (zero when feasible).
    pub fn max_violation(&self, eta: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (row, b) in self.linear.matrix.row_iter().zip(&self.linear.rhs) {
            worst = worst.max(dot(row, eta) - b);
        }
        for c in &self.soc {
            let lhs = crate::linalg::norm2(&c.matrix.mul_vec(eta));
            worst = worst.max(lhs - dot(&c.linear, eta) - c.constant);
        }
        worst
    }
}

/// Trapezoid weights `ω = Δs (1/2, 1, …, 1, 1/2)`.
pub fn quadrature_weights(grid: &TimeGrid) -> Vec<f64> {
    grid.trapezoid_weights()
}

/// Offset, weights and kernels of the difference-set support function.
#[derive(Debug, Clone, PartialEq)]
pub struct PairData {
    /// `c(t)` for norm balls, `c_j^box(t)` for a box block.
    pub offset: Vec<f64>,
    pub weights: Vec<f64>,
    /// `Γ_k` for each breakpoint `k`.
    pub kernels: Vec<Matrix>,
    /// Norm applied to `Γ_k y`. Box blocks have one row, where every norm is
    /// the absolute value; they use `Infinity` so the lowering matches the
    /// `±γᵀy ≤ θ` rows.
    pub norm: NormExponent,
}

impl PairData {
    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// `⟨c, y⟩ + Σ_k ω_k ‖Γ_k y‖_q`, i.e. the program objective with every
    /// epigraph variable at its smallest feasible value.
    pub fn value(&self, y: &[f64]) -> f64 {
        let mut v = dot(&self.offset, y);
        for (w, g) in self.weights.iter().zip(&self.kernels) {
            v += w * self.norm.norm(&g.mul_vec(y));
        }
        v
    }

    fn uses_auxiliary(&self) -> bool {
        self.norm == NormExponent::One
    }

    fn layout(&self) -> Layout {
        let d = self.dim();
        let epi = self.kernels.len();
        let aux = if self.uses_auxiliary() { self.kernels.iter().map(Matrix::rows).sum() } else { 0 };
        Layout { direction: 0..d, epigraph: d..d + epi, auxiliary: d + epi..d + epi + aux }
    }

    /// Decision vector for direction `y` with exact epigraph (and auxiliary)
    /// values; feasible whenever `‖y‖₂ ≤ 1`.
    pub fn lift(&self, y: &[f64]) -> Vec<f64> {
        let layout = self.layout();
        let mut eta = vec![0.0; layout.auxiliary.end];
        eta[layout.direction.clone()].copy_from_slice(y);
        let mut aux = layout.auxiliary.start;
        for (k, g) in self.kernels.iter().enumerate() {
            let gy = g.mul_vec(y);
            eta[layout.epigraph.start + k] = self.norm.norm(&gy);
            if self.uses_auxiliary() {
                for v in gy {
                    eta[aux] = v.abs();
                    aux += 1;
                }
            }
        }
        eta
    }

    /// Epigraph-form cone program.
    pub fn program(&self) -> ConeProgram {
        let layout = self.layout();
        let nv = layout.auxiliary.end;
        let d = self.dim();
        let theta = |k: usize| layout.epigraph.start + k;

        let mut objective = vec![0.0; nv];
        objective[..d].copy_from_slice(&self.offset);
        objective[layout.epigraph.clone()].copy_from_slice(&self.weights);

        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut soc = Vec::new();
        match self.norm {
            NormExponent::Two => {
                for (k, g) in self.kernels.iter().enumerate() {
                    let mut m = Matrix::zeros(g.rows(), nv);
                    m.set_block(0, 0, g);
                    let mut e = vec![0.0; nv];
                    e[theta(k)] = 1.0;
                    soc.push(SocBlock { matrix: m, linear: e, constant: 0.0 });
                }
            }
            NormExponent::Infinity => {
                for (k, g) in self.kernels.iter().enumerate() {
                    for gi in g.row_iter() {
                        for sign in [1.0, -1.0] {
                            let mut row = vec![0.0; nv];
                            row[..d].iter_mut().zip(gi).for_each(|(r, v)| *r = sign * v);
                            row[theta(k)] = -1.0;
                            rows.push(row);
                        }
                    }
                }
            }
            NormExponent::One => {
                let mut aux = layout.auxiliary.start;
                for (k, g) in self.kernels.iter().enumerate() {
                    let first = aux;
                    for gi in g.row_iter() {
                        for sign in [1.0, -1.0] {
                            let mut row = vec![0.0; nv];
                            row[..d].iter_mut().zip(gi).for_each(|(r, v)| *r = sign * v);
                            row[aux] = -1.0;
                            rows.push(row);
                        }
                        aux += 1;
                    }
                    let mut row = vec![0.0; nv];
                    row[first..aux].iter_mut().for_each(|r| *r = 1.0);
                    row[theta(k)] = -1.0;
                    rows.push(row);
                }
            }
        }
        for k in 0..self.kernels.len() {
            let mut row = vec![0.0; nv];
            row[theta(k)] = -1.0;
            rows.push(row);
        }
        let mut ball = Matrix::zeros(d, nv);
        ball.set_block(0, 0, &Matrix::identity(d));
        soc.push(SocBlock { matrix: ball, linear: vec![0.0; nv], constant: 1.0 });

        let rhs = vec![0.0; rows.len()];
        let linear = LinearRows { matrix: Matrix::from_rows(&rows, nv), rhs };
        ConeProgram::new(objective, linear, soc, layout).expect("builder produces consistent dimensions")
    }
}

fn check_pair(a: &AgentScenario, b: &AgentScenario, kind: UncertaintyKind) -> Result<()> {
    if a.system() != b.system() {
        return Err(Error::Pairing(format!(
            "relative degrees differ: {:?} vs {:?}",
            a.system().relative_degrees(),
            b.system().relative_degrees()
        )));
    }
    if a.grid() != b.grid() {
        return Err(Error::Pairing("agents use different time grids".into()));
    }
    for sc in [a, b] {
        if sc.uncertainty().kind() != kind {
            return Err(Error::KindMismatch { expected: kind.name(), found: sc.uncertainty().kind().name() });
        }
    }
    Ok(())
}

/// `c(t) = exp(tA)(x0^A − x0^B)` and `Γ_k = (ℓ^A + ℓ^B)(s_k) (exp(s_k A)B)ᵀ`.
pub fn pair_data_normball(a: &AgentScenario, b: &AgentScenario) -> Result<PairData> {
    check_pair(a, b, UncertaintyKind::NormBall)?;
    let (UncertaintyModel::NormBall { p: pa, ell: la }, UncertaintyModel::NormBall { p: pb, ell: lb }) =
        (a.uncertainty(), b.uncertainty())
    else {
        unreachable!("kinds checked above")
    };
    if pa != pb {
        return Err(Error::Pairing(format!("norm exponents differ: {} vs {}", pa.as_f64(), pb.as_f64())));
    }
    let sys = a.system();
    let grid = a.grid();
    let diff: Vec<f64> = a.x0().iter().zip(b.x0()).map(|(u, v)| u - v).collect();
    let offset = sys.propagate(grid.horizon(), &diff);
    let kernels = (0..grid.len())
        .map(|k| {
            let s = grid.breakpoint(k);
            let scale = la[k] + lb[k];
            let mut g = Matrix::zeros(sys.m(), sys.n());
            for j in 0..sys.m() {
                let range = sys.block_range(j).expect("block in range");
                for (c, v) in range.zip(xi(sys.relative_degrees()[j], s)) {
                    g[(j, c)] = scale * v;
                }
            }
            g
        })
        .collect();
    Ok(PairData { offset, weights: grid.trapezoid_weights(), kernels, norm: pa.conjugate() })
}

/// Box block `j`: `c_j = exp(tA_j)(x_j0^A − x_j0^B) + Σ_k ω_k (ν_j^A − ν_j^B)(s_k) ξ_j(s_k)`
/// and `Γ_k = (μ_j^A + μ_j^B)(s_k) ξ_j(s_k)ᵀ`.
pub fn pair_data_box(a: &AgentScenario, b: &AgentScenario, j: usize) -> Result<PairData> {
    check_pair(a, b, UncertaintyKind::Box)?;
    let sys = a.system();
    let range = sys.block_range(j)?;
    let r = range.len();
    let grid = a.grid();
    let weights = grid.trapezoid_weights();
    let da = a.uncertainty().box_derived().expect("box kind");
    let db = b.uncertainty().box_derived().expect("box kind");

    let diff: Vec<f64> = a.x0()[range.clone()].iter().zip(&b.x0()[range]).map(|(u, v)| u - v).collect();
    let mut offset = sys.block_transition(j, grid.horizon())?.mul_vec(&diff);
    let mut kernels = Vec::with_capacity(grid.len());
    for (k, w) in weights.iter().enumerate() {
        let x = xi(r, grid.breakpoint(k));
        let dnu = da.nu[j][k] - db.nu[j][k];
        if dnu != 0.0 {
            offset.iter_mut().zip(&x).for_each(|(c, v)| *c += w * dnu * v);
        }
        let mu = da.mu[j][k] + db.mu[j][k];
        kernels.push(Matrix::from_row_major(1, r, x.iter().map(|v| mu * v).collect()));
    }
    Ok(PairData { offset, weights, kernels, norm: NormExponent::Infinity })
}

/// Epigraph SOCP for two norm-ball agents; `η = (y, θ[, v])`.
pub fn build_pair_normball(a: &AgentScenario, b: &AgentScenario) -> Result<ConeProgram> {
    Ok(pair_data_normball(a, b)?.program())
}

/// SOCP for block `j` of two box agents; `η = (y_j, θ)`.
pub fn build_pair_box(a: &AgentScenario, b: &AgentScenario, j: usize) -> Result<ConeProgram> {
    Ok(pair_data_box(a, b, j)?.program())
}
