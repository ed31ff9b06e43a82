//! Certification and falsification of reach-set intersection for pairs of
//! integrator (Brunovsky normal form) agents.
//!
//! Each agent is a chain-of-integrators system driven by a time-varying input
//! uncertainty set, either a `p`-norm ball or a hyperrectangle. The reach sets
//! of two agents intersect iff the support function of their difference set
//! is nonnegative on the unit sphere; relaxing the sphere to the unit ball
//! gives a convex program whose optimal value has the same sign. This crate
//! evaluates the support functions in closed form, transcribes the relaxed
//! problems into second-order cone programs, solves them with a dense
//! primal-dual interior-point method and turns the sign of the optimum into a
//! verdict with a separating direction.
//!
//! The [`oracle`] module is a solver-free cross-check: bang-bang and
//! dual-aligned extremal controls integrated on a refined grid, sampled reach
//! sets and a direction-sampling intersection test.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and reporting live in the `reachcert` crate.

#![no_std]
#![forbid(unsafe_code)]
// index loops read closer to the math in the factorizations; `!(x > 0.0)`
// deliberately rejects NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod certify;
mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod solver;
pub mod support;
pub mod transcribe;

pub use crate::certify::{
    certify, certify_box, certify_normball, decide, BlockReport, CertificationReport, CertifyOptions,
    Confidence, Decision, Verdict,
};
pub use crate::error::{Error, Result};
pub use crate::model::{AgentScenario, IntegratorSystem, TimeGrid, MAX_RELATIVE_DEGREE};
pub use crate::solver::{solve, Solution, SolveStatus, SolverSettings};
pub use crate::support::{NormExponent, UncertaintyKind, UncertaintyModel};
pub use crate::transcribe::{ConeProgram, PairData};
