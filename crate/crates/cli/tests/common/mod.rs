#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use reachcert_core::{AgentScenario, IntegratorSystem, NormExponent, TimeGrid, UncertaintyModel};

/// Smooth periodic profile sampled on the grid: `c + a sin(ωs + φ)`.
pub fn smooth(rng: &mut ChaCha8Rng, grid: &TimeGrid, center: f64, amplitude: f64) -> Vec<f64> {
    let omega = rng.random_range(0.5..3.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let a = rng.random_range(0.0..amplitude);
    grid.breakpoints().map(|s| center + a * (omega * s + phase).sin()).collect()
}

/// Relative degrees with `m ≤ max_m` blocks summing to at most `max_n`.
pub fn degrees(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> Vec<usize> {
    let m = rng.random_range(1..=max_m.min(max_n));
    let mut r = vec![1; m];
    let extra = rng.random_range(0..=max_n - m);
    for _ in 0..extra {
        let j = rng.random_range(0..m);
        r[j] += 1;
    }
    r
}

pub fn box_model(rng: &mut ChaCha8Rng, grid: &TimeGrid, m: usize) -> UncertaintyModel {
    let (mut alpha, mut beta) = (Vec::new(), Vec::new());
    for _ in 0..m {
        let (c, h) = (rng.random_range(-0.5..0.5), rng.random_range(0.4..1.0));
        let mid = smooth(rng, grid, c, 0.3);
        let half = smooth(rng, grid, h, 0.3);
        alpha.push(mid.iter().zip(&half).map(|(c, h)| c - h).collect());
        beta.push(mid.iter().zip(&half).map(|(c, h)| c + h).collect());
    }
    UncertaintyModel::box_bounds(alpha, beta).unwrap()
}

pub fn ball_model(rng: &mut ChaCha8Rng, grid: &TimeGrid, p: NormExponent) -> UncertaintyModel {
    let c = rng.random_range(0.5..1.0);
    let ell = smooth(rng, grid, c, 0.3);
    UncertaintyModel::norm_ball(p, ell).unwrap()
}

pub fn random_p(rng: &mut ChaCha8Rng) -> NormExponent {
    [NormExponent::One, NormExponent::Two, NormExponent::Infinity][rng.random_range(0..3)]
}

/// A pair of agents on a shared system and grid. `boxed` picks the
/// uncertainty kind; the initial offset scale is random so both verdicts
/// occur.
pub fn random_pair(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_m: usize,
    steps: usize,
    boxed: bool,
) -> (AgentScenario, AgentScenario) {
    let r = degrees(rng, max_n, max_m);
    let sys = IntegratorSystem::new(r).unwrap();
    let grid = TimeGrid::new(rng.random_range(0.5..2.0), steps).unwrap();
    let n = sys.n();
    let m = sys.m();
    let x0a: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    // half near-coincident, half well apart
    let scale = if rng.random_bool(0.5) { rng.random_range(0.0..0.2) } else { rng.random_range(0.5..3.0) };
    let x0b: Vec<f64> = x0a.iter().map(|x| x + scale * rng.random_range(-1.0..1.0)).collect();
    let (ua, ub) = if boxed {
        (box_model(rng, &grid, m), box_model(rng, &grid, m))
    } else {
        let p = random_p(rng);
        (ball_model(rng, &grid, p), ball_model(rng, &grid, p))
    };
    let a = AgentScenario::new(sys.clone(), x0a, ua, grid).unwrap();
    let b = AgentScenario::new(sys, x0b, ub, grid).unwrap();
    (a, b)
}
