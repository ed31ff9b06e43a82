//! Dense primal-dual interior-point method for linear and second-order cone
//! constraints.
//!
//! A [`ConeProgram`] is brought into the standard conic form
//!
//! ```text
//! minimize  cᵀx   subject to  G x + s = h,  s ∈ K
//! maximize −hᵀz   subject to  Gᵀz + c = 0,  z ∈ K
//! ```
//!
//! with `K` a product of a nonnegative orthant and second-order cones. The
//! iteration is infeasible-start path following with Nesterov-Todd scaling
//! and a Mehrotra predictor-corrector. Each Newton system is reduced to the
//! normal matrix `Gᵀ W⁻² G`, regularized, factored with `LDLᵀ` and polished
//! with two rounds of iterative refinement against the unregularized system.
//!
//! Starting point is `x = 0` with `s` and `z` at the cone identities; there is
//! nothing random, so runs are bitwise reproducible.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{axpy, dot, norm2, Ldlt, Matrix};
use crate::transcribe::ConeProgram;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Relative duality gap at which a point is declared optimal.
    pub tol_gap: f64,
    /// Relative primal and dual residual tolerance.
    pub tol_feas: f64,
    pub max_iters: usize,
    /// Static regularization added to the diagonal of the reduced KKT matrix.
    pub regularization: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol_gap: 1e-9, tol_feas: 1e-9, max_iters: 200, regularization: 1e-10 }
    }
}

impl SolverSettings {
    pub fn is_valid(&self) -> bool {
        self.tol_gap > 0.0 && self.tol_feas > 0.0 && self.max_iters >= 1 && self.regularization >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    NumericalFailure,
}

impl SolveStatus {
    pub fn name(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::MaxIters => "max_iters",
            Self::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Primal objective `cᵀx` at the returned iterate.
    pub objective: f64,
    /// Dual objective `−hᵀz` at the returned iterate.
    pub dual_objective: f64,
    pub primal: Vec<f64>,
    pub slack: Vec<f64>,
    pub dual: Vec<f64>,
    pub iterations: usize,
    /// Complementarity `sᵀz`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

/// One line of the optional per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Step length taken to reach this iterate (0 for the starting point).
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ConeKind {
    NonNeg,
    Soc,
}

#[derive(Debug, Clone, Copy)]
struct Cone {
    kind: ConeKind,
    start: usize,
    dim: usize,
}

impl Cone {
    fn range(&self) -> core::ops::Range<usize> {
        self.start..self.start + self.dim
    }
}

/// `G`, `h`, `c` and the cone layout of a program.
struct StandardForm {
    g: Matrix,
    h: Vec<f64>,
    c: Vec<f64>,
    cones: Vec<Cone>,
}

impl StandardForm {
    fn new(program: &ConeProgram) -> Self {
        let nv = program.num_vars();
        let lin = program.linear.rhs.len();
        let rows = lin + program.soc.iter().map(|c| c.matrix.rows() + 1).sum::<usize>();
        let mut g = Matrix::zeros(rows, nv);
        let mut h = vec![0.0; rows];
        let mut cones = Vec::new();
        for i in 0..lin {
            g.row_mut(i).copy_from_slice(program.linear.matrix.row(i));
            h[i] = program.linear.rhs[i];
        }
        if lin > 0 {
            cones.push(Cone { kind: ConeKind::NonNeg, start: 0, dim: lin });
        }
        let mut at = lin;
        for block in &program.soc {
            let dim = block.matrix.rows() + 1;
            for (dst, src) in g.row_mut(at).iter_mut().zip(&block.linear) {
                *dst = -src;
            }
            h[at] = block.constant;
            for i in 0..block.matrix.rows() {
                for (dst, src) in g.row_mut(at + 1 + i).iter_mut().zip(block.matrix.row(i)) {
                    *dst = -src;
                }
            }
            cones.push(Cone { kind: ConeKind::Soc, start: at, dim });
            at += dim;
        }
        Self { g, h, c: program.objective.clone(), cones }
    }

    fn degree(&self) -> usize {
        self.cones
            .iter()
            .map(|c| match c.kind {
                ConeKind::NonNeg => c.dim,
                ConeKind::Soc => 1,
            })
            .sum()
    }

    fn identity(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.h.len()];
        for c in &self.cones {
            match c.kind {
                ConeKind::NonNeg => e[c.range()].iter_mut().for_each(|v| *v = 1.0),
                ConeKind::Soc => e[c.start] = 1.0,
            }
        }
        e
    }
}

/// Nesterov-Todd scaling of one cone.
#[derive(Debug, Clone)]
enum Scaling {
    /// `W = diag(w)`
    NonNeg(Vec<f64>),
    /// `W = β (2 v vᵀ − J)` with `vᵀ J v = 1/2`
    Soc { beta: f64, v: Vec<f64> },
}

impl Scaling {
    fn new(kind: ConeKind, s: &[f64], z: &[f64]) -> Option<Self> {
        match kind {
            ConeKind::NonNeg => {
                let mut w = Vec::with_capacity(s.len());
                for (si, zi) in s.iter().zip(z) {
                    if !(*si > 0.0 && *zi > 0.0) {
                        return None;
                    }
                    w.push(libm::sqrt(si / zi));
                }
                Some(Self::NonNeg(w))
            }
            ConeKind::Soc => {
                let s_nrm = soc_residual(s)?;
                let z_nrm = soc_residual(z)?;
                let sb: Vec<f64> = s.iter().map(|v| v / s_nrm).collect();
                let zb: Vec<f64> = z.iter().map(|v| v / z_nrm).collect();
                let gamma = libm::sqrt(0.5 * (1.0 + dot(&sb, &zb)));
                // scaling point w̄ = (s̄ + J z̄)/(2γ), then v = (w̄ + e)/√(2(w̄₀ + 1))
                let w0 = (sb[0] + zb[0]) / (2.0 * gamma);
                let c = 1.0 / libm::sqrt(2.0 * (w0 + 1.0));
                let mut v = Vec::with_capacity(s.len());
                v.push((w0 + 1.0) * c);
                v.extend(sb[1..].iter().zip(&zb[1..]).map(|(a, b)| c * (a - b) / (2.0 * gamma)));
                Some(Self::Soc { beta: libm::sqrt(s_nrm / z_nrm), v })
            }
        }
    }

    fn apply(&self, x: &mut [f64]) {
        match self {
            Self::NonNeg(w) => x.iter_mut().zip(w).for_each(|(xi, wi)| *xi *= wi),
            Self::Soc { beta, v } => {
                // β (2 v (vᵀx) − J x)
                let vx = dot(v, x);
                x[0] = beta * (2.0 * v[0] * vx - x[0]);
                for (xi, vi) in x[1..].iter_mut().zip(&v[1..]) {
                    *xi = beta * (2.0 * vi * vx + *xi);
                }
            }
        }
    }

    fn apply_inverse(&self, x: &mut [f64]) {
        match self {
            Self::NonNeg(w) => x.iter_mut().zip(w).for_each(|(xi, wi)| *xi /= wi),
            Self::Soc { beta, v } => {
                // (1/β) (2 J v (vᵀ J x) − J x)
                let vjx = v[0] * x[0] - dot(&v[1..], &x[1..]);
                let inv = 1.0 / beta;
                x[0] = inv * (2.0 * v[0] * vjx - x[0]);
                for (xi, vi) in x[1..].iter_mut().zip(&v[1..]) {
                    *xi = inv * (-2.0 * vi * vjx + *xi);
                }
            }
        }
    }
}

/// `sqrt(x0² − ‖x1‖²)` when `x` is strictly inside the cone.
fn soc_residual(x: &[f64]) -> Option<f64> {
    let t = norm2(&x[1..]);
    let r = (x[0] - t) * (x[0] + t);
    (x[0] > 0.0 && r > 0.0 && r.is_finite()).then(|| libm::sqrt(r))
}

/// Jordan product `x ∘ y` on one cone.
fn jordan_product(kind: ConeKind, x: &[f64], y: &[f64], out: &mut [f64]) {
    match kind {
        ConeKind::NonNeg => {
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = a * b;
            }
        }
        ConeKind::Soc => {
            out[0] = dot(x, y);
            for i in 1..x.len() {
                out[i] = x[0] * y[i] + y[0] * x[i];
            }
        }
    }
}

/// Solves `λ ∘ u = b` for `u` on one cone.
fn jordan_divide(kind: ConeKind, lambda: &[f64], b: &[f64], out: &mut [f64]) {
    match kind {
        ConeKind::NonNeg => {
            for ((o, l), bi) in out.iter_mut().zip(lambda).zip(b) {
                *o = bi / l;
            }
        }
        ConeKind::Soc => {
            let l0 = lambda[0];
            let t = norm2(&lambda[1..]);
            let det = (l0 - t) * (l0 + t);
            let u0 = (l0 * b[0] - dot(&lambda[1..], &b[1..])) / det;
            out[0] = u0;
            for i in 1..lambda.len() {
                out[i] = (b[i] - u0 * lambda[i]) / l0;
            }
        }
    }
}

/// Largest `α ≥ 0` keeping `x + α d` in the closed cone.
fn max_step(kind: ConeKind, x: &[f64], d: &[f64]) -> f64 {
    match kind {
        ConeKind::NonNeg => x
            .iter()
            .zip(d)
            .filter(|(_, di)| **di < 0.0)
            .map(|(xi, di)| -xi / di)
            .fold(f64::INFINITY, f64::min),
        ConeKind::Soc => {
            // boundary crossing of a t² + b t + c with c > 0
            let a = d[0] * d[0] - dot(&d[1..], &d[1..]);
            let b = 2.0 * (x[0] * d[0] - dot(&x[1..], &d[1..]));
            let t = norm2(&x[1..]);
            let c = (x[0] - t) * (x[0] + t);
            smallest_positive_root(a, b, c)
        }
    }
}

fn smallest_positive_root(a: f64, b: f64, c: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return f64::INFINITY;
    }
    if a.abs() <= 1e-14 * scale {
        return if b < 0.0 { -c / b } else { f64::INFINITY };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return f64::INFINITY;
    }
    let q = -0.5 * (b + libm::copysign(libm::sqrt(disc), b));
    let mut best = f64::INFINITY;
    for r in [q / a, if q != 0.0 { c / q } else { f64::INFINITY }] {
        if r > 0.0 && r < best {
            best = r;
        }
    }
    best
}

struct Workspace<'a> {
    form: &'a StandardForm,
    scalings: Vec<Scaling>,
    /// `W⁻¹ G`
    g_scaled: Matrix,
    factor: Ldlt,
}

impl<'a> Workspace<'a> {
    fn new(form: &'a StandardForm, s: &[f64], z: &[f64], reg: f64) -> Option<Self> {
        let mut scalings = Vec::with_capacity(form.cones.len());
        for c in &form.cones {
            scalings.push(Scaling::new(c.kind, &s[c.range()], &z[c.range()])?);
        }
        let (rows, nv) = (form.g.rows(), form.g.cols());
        let mut g_scaled = form.g.clone();
        let mut col = Vec::new();
        for (c, sc) in form.cones.iter().zip(&scalings) {
            for j in 0..nv {
                col.clear();
                col.extend(c.range().map(|i| g_scaled[(i, j)]));
                if col.iter().all(|v| *v == 0.0) {
                    continue;
                }
                sc.apply_inverse(&mut col);
                for (i, v) in c.range().zip(&col) {
                    g_scaled[(i, j)] = *v;
                }
            }
        }
        // normal matrix from sparse row outer products
        let mut h = Matrix::zeros(nv, nv);
        let mut nz: Vec<(usize, f64)> = Vec::new();
        for i in 0..rows {
            nz.clear();
            nz.extend(g_scaled.row(i).iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(j, v)| (j, *v)));
            for (p, &(a, va)) in nz.iter().enumerate() {
                for &(b, vb) in &nz[..=p] {
                    h[(a, b)] += va * vb;
                }
            }
        }
        for a in 0..nv {
            for b in 0..a {
                h[(b, a)] = h[(a, b)];
            }
            h[(a, a)] += reg;
        }
        let factor = Ldlt::factor(&h)?;
        Some(Self { form, scalings, g_scaled, factor })
    }

    fn scale(&self, x: &mut [f64], inverse: bool) {
        for (c, sc) in self.form.cones.iter().zip(&self.scalings) {
            if inverse {
                sc.apply_inverse(&mut x[c.range()]);
            } else {
                sc.apply(&mut x[c.range()]);
            }
        }
    }

    /// Solves
    ///
    /// ```text
    /// Gᵀ dz = −rx,   G dx + ds = −rz,   λ ∘ (W⁻¹ ds + W dz) = d_s
    /// ```
    ///
    /// given `u = λ ⋄ d_s`.
    fn newton(&self, rx: &[f64], rz: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        // t = u + W⁻¹ rz
        let mut t = rz.to_vec();
        self.scale(&mut t, true);
        axpy(1.0, u, &mut t);

        let mut rhs = self.g_scaled.tr_mul_vec(&t);
        rhs.iter_mut().zip(rx).for_each(|(r, x)| *r = -*r - x);
        let mut dx = self.factor.solve(&rhs);
        let mut dz_scaled = self.g_scaled.mul_vec(&dx);
        axpy(1.0, &t, &mut dz_scaled);

        for _ in 0..2 {
            // residual of Ĝᵀ (Ĝ dx + t) = −rx
            let mut res = self.g_scaled.tr_mul_vec(&dz_scaled);
            res.iter_mut().zip(rx).for_each(|(r, x)| *r = -x - *r);
            let corr = self.factor.solve(&res);
            axpy(1.0, &corr, &mut dx);
            let dcorr = self.g_scaled.mul_vec(&corr);
            axpy(1.0, &dcorr, &mut dz_scaled);
        }

        // dz = W⁻¹ (Ĝ dx + t),  ds = W (u − W dz)
        let mut dz = dz_scaled.clone();
        self.scale(&mut dz, true);
        let mut ds = u.to_vec();
        axpy(-1.0, &dz_scaled, &mut ds);
        self.scale(&mut ds, false);
        (dx, dz, ds)
    }
}

fn cone_step(form: &StandardForm, s: &[f64], ds: &[f64], z: &[f64], dz: &[f64]) -> f64 {
    form.cones
        .iter()
        .map(|c| {
            let r = c.range();
            max_step(c.kind, &s[r.clone()], &ds[r.clone()]).min(max_step(c.kind, &z[r.clone()], &dz[r]))
        })
        .fold(f64::INFINITY, f64::min)
}

/// Solves `program`; see [`solve_traced`].
pub fn solve(program: &ConeProgram, settings: &SolverSettings) -> Solution {
    solve_traced(program, settings, |_| {})
}

/// Solves `program`, calling `observer` once per iterate.
pub fn solve_traced(
    program: &ConeProgram,
    settings: &SolverSettings,
    mut observer: impl FnMut(&IterationRecord),
) -> Solution {
    let form = StandardForm::new(program);
    let (rows, nv) = (form.g.rows(), form.g.cols());
    let e = form.identity();
    let degree = form.degree().max(1) as f64;
    let h_norm = norm2(&form.h).max(1.0);
    let c_norm = norm2(&form.c).max(1.0);

    let mut x = vec![0.0; nv];
    let mut s = e.clone();
    let mut z = e.clone();
    let mut step = 0.0;
    let mut best: Option<(f64, Solution)> = None;

    let snapshot = |status, x: &[f64], s: &[f64], z: &[f64], it, gap, pres, dres, pcost, dcost| Solution {
        status,
        objective: pcost,
        dual_objective: dcost,
        primal: x.to_vec(),
        slack: s.to_vec(),
        dual: z.to_vec(),
        iterations: it,
        gap,
        primal_residual: pres,
        dual_residual: dres,
    };

    let mut lam = vec![0.0; rows];
    let mut work = vec![0.0; rows];
    for iter in 0..=settings.max_iters {
        // rx = Gᵀz + c,  rz = Gx + s − h
        let mut rx = form.g.tr_mul_vec(&z);
        axpy(1.0, &form.c, &mut rx);
        let mut rz = form.g.mul_vec(&x);
        axpy(1.0, &s, &mut rz);
        axpy(-1.0, &form.h, &mut rz);

        let pcost = dot(&form.c, &x);
        let dcost = -dot(&form.h, &z);
        let gap = dot(&s, &z);
        let pres = norm2(&rz) / h_norm;
        let dres = norm2(&rx) / c_norm;
        observer(&IterationRecord {
            iteration: iter,
            primal_objective: pcost,
            dual_objective: dcost,
            gap,
            primal_residual: pres,
            dual_residual: dres,
            step,
        });

        let finite = pcost.is_finite() && dcost.is_finite() && gap.is_finite() && pres.is_finite() && dres.is_finite();
        if !finite {
            return best.map(|(_, b)| Solution { status: SolveStatus::NumericalFailure, ..b }).unwrap_or_else(|| {
                snapshot(SolveStatus::NumericalFailure, &x, &s, &z, iter, gap, pres, dres, pcost, dcost)
            });
        }

        let gap_scale = pcost.abs().min(dcost.abs()).max(1.0);
        let merit = pres.max(dres).max(gap / gap_scale);
        if best.as_ref().is_none_or(|(m, _)| merit < *m) {
            best = Some((merit, snapshot(SolveStatus::MaxIters, &x, &s, &z, iter, gap, pres, dres, pcost, dcost)));
        }
        if pres <= settings.tol_feas && dres <= settings.tol_feas && gap <= settings.tol_gap * gap_scale {
            return snapshot(SolveStatus::Optimal, &x, &s, &z, iter, gap, pres, dres, pcost, dcost);
        }
        if iter == settings.max_iters {
            break;
        }

        let Some(ws) = Workspace::new(&form, &s, &z, settings.regularization) else {
            let (_, b) = best.expect("recorded above");
            return Solution { status: SolveStatus::NumericalFailure, ..b };
        };
        lam.copy_from_slice(&z);
        ws.scale(&mut lam, false);

        // predictor: d_s = −λ∘λ, so u = −λ
        let u_aff: Vec<f64> = lam.iter().map(|v| -v).collect();
        let (_, dz_a, ds_a) = ws.newton(&rx, &rz, &u_aff);
        let alpha_aff = cone_step(&form, &s, &ds_a, &z, &dz_a).min(1.0);
        let mu = gap / degree;
        let sigma = libm::pow(1.0 - alpha_aff, 3.0);

        // corrector: d_s = −λ∘λ − (W⁻¹Δs_a)∘(WΔz_a) + σμe
        let mut ws_a = ds_a;
        ws.scale(&mut ws_a, true);
        let mut wz_a = dz_a;
        ws.scale(&mut wz_a, false);
        let mut d_s = vec![0.0; rows];
        for c in &form.cones {
            let r = c.range();
            jordan_product(c.kind, &lam[r.clone()], &lam[r.clone()], &mut work[r.clone()]);
            let mut cross = vec![0.0; c.dim];
            jordan_product(c.kind, &ws_a[r.clone()], &wz_a[r.clone()], &mut cross);
            for (i, k) in r.clone().enumerate() {
                d_s[k] = -work[k] - cross[i] + sigma * mu * e[k];
            }
        }
        let mut u = vec![0.0; rows];
        for c in &form.cones {
            let r = c.range();
            jordan_divide(c.kind, &lam[r.clone()], &d_s[r.clone()], &mut u[r]);
        }
        let scale_res = 1.0 - sigma;
        let rx_c: Vec<f64> = rx.iter().map(|v| scale_res * v).collect();
        let rz_c: Vec<f64> = rz.iter().map(|v| scale_res * v).collect();
        let (dx, dz, ds) = ws.newton(&rx_c, &rz_c, &u);

        step = (0.99 * cone_step(&form, &s, &ds, &z, &dz)).min(1.0);
        if !(step > 0.0) || !step.is_finite() {
            let (_, b) = best.expect("recorded above");
            return Solution { status: SolveStatus::NumericalFailure, ..b };
        }
        axpy(step, &dx, &mut x);
        axpy(step, &ds, &mut s);
        axpy(step, &dz, &mut z);
    }
    best.map(|(_, b)| b).expect("at least one iterate")
}

/// The `y` part of the optimal decision vector.
///
/// When the optimal value is negative the objective is positively homogeneous
/// in `y` along the optimal ray, so rescaling `y` onto the unit sphere keeps it
/// feasible and can only lower the objective; the returned direction then has
/// unit length. Otherwise `y` is returned as the solver found it.
pub fn extract_witness(program: &ConeProgram, solution: &Solution) -> crate::Result<Vec<f64>> {
    if solution.status != SolveStatus::Optimal {
        return Err(crate::Error::WitnessUnavailable(solution.status.name()));
    }
    let y = program.direction(&solution.primal).to_vec();
    let norm = norm2(&y);
    if solution.objective < 0.0 && norm > 0.0 {
        Ok(y.iter().map(|v| v / norm).collect())
    } else {
        Ok(y)
    }
}
