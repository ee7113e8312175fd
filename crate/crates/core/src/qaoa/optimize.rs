//! Classical outer loop: derivative-free minimization of the QAOA energy over
//! the `2p` angles `(gamma_0..gamma_{p-1}, beta_0..beta_{p-1})`.
//!
//! With `ramp_fraction > 0` (and `p >= 3`) the search first runs over linear
//! schedules, `gamma_k` and `beta_k` interpolating between free end points,
//! then releases every angle starting from the best schedule found.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::{evolve, expectation, CostDiagonal, Optimizer, QaoaConfig, QaoaError};

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub expectation: f64,
    pub initial_expectation: f64,
    pub evaluations: usize,
}

/// Linear ramp, jittered by the seed.
fn initial_point(p: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(2 * p);
    for k in 0..p {
        x.push(0.1 * (k + 1) as f64 / p as f64 + rng.gen_range(-0.01..0.01));
    }
    for k in 0..p {
        x.push(0.1 * (1.0 - k as f64 / p as f64) + rng.gen_range(-0.01..0.01));
    }
    x
}

/// Angles of the schedule running linearly from `(g0, g1)` and `(b0, b1)`.
fn ramp(r: &[f64], p: usize) -> Vec<f64> {
    let t = |k: usize| k as f64 / (p - 1) as f64;
    let mut x: Vec<f64> = (0..p).map(|k| r[0] + (r[1] - r[0]) * t(k)).collect();
    x.extend((0..p).map(|k| r[2] + (r[3] - r[2]) * t(k)));
    x
}

/// Energy evaluations with a running count and the best point seen.
struct Objective<'a> {
    diag: &'a CostDiagonal,
    p: usize,
    evals: usize,
    best: (f64, Vec<f64>),
}

impl Objective<'_> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let sv = evolve(&x[..self.p], &x[self.p..], self.diag).expect("matching lengths");
        let e = expectation(&sv, self.diag);
        self.evals += 1;
        if e < self.best.0 {
            self.best = (e, x.to_vec());
        }
        e
    }
}

fn run(optimizer: Optimizer, f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], f0: Option<f64>, budget: usize, seed: u64) {
    match optimizer {
        Optimizer::NelderMead => nelder_mead(f, x0, f0, budget),
        Optimizer::Spsa => spsa(f, x0, budget, seed),
    }
}

pub fn optimize_params(diag: &CostDiagonal, cfg: &QaoaConfig) -> Result<OptimizedParams, QaoaError> {
    cfg.validate()?;
    let p = cfg.p;
    let x0 = initial_point(p, cfg.seed);
    let mut obj = Objective {
        diag,
        p,
        evals: 0,
        best: (f64::INFINITY, x0.clone()),
    };
    let initial_expectation = obj.eval(&x0);

    // a ramp has 4 parameters, so it only narrows the search from p = 3 on
    let ramp_budget = if p >= 3 { (cfg.ramp_fraction * cfg.max_evals as f64) as usize } else { 0 };
    if ramp_budget > 1 && obj.evals < cfg.max_evals {
        let r0 = [x0[0], x0[p - 1], x0[p], x0[2 * p - 1]];
        let budget = ramp_budget.min(cfg.max_evals - obj.evals);
        run(cfg.optimizer, &mut |r| obj.eval(&ramp(r, p)), &r0, None, budget, cfg.seed);
    }
    if obj.evals < cfg.max_evals {
        let (f0, start) = obj.best.clone();
        let budget = cfg.max_evals - obj.evals;
        run(cfg.optimizer, &mut |x| obj.eval(x), &start, Some(f0), budget, cfg.seed.wrapping_add(1));
    }

    let (expectation, x) = obj.best;
    Ok(OptimizedParams {
        gamma: x[..p].to_vec(),
        beta: x[p..].to_vec(),
        expectation,
        initial_expectation,
        evaluations: obj.evals,
    })
}

/// Nelder–Mead with the standard coefficients (1, 2, 1/2, 1/2) and an
/// axis-aligned initial simplex of edge 0.1. `f0` is `f(x0)` when already
/// known. Stops after `budget` calls of `f` or when the simplex goes flat.
fn nelder_mead(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], f0: Option<f64>, budget: usize) {
    let dim = x0.len();
    let mut used = 0usize;
    let mut call = |x: &[f64], used: &mut usize| {
        *used += 1;
        f(x)
    };
    let f0 = match f0 {
        Some(v) => v,
        None => call(x0, &mut used),
    };
    let mut simplex: Vec<(f64, Vec<f64>)> = vec![(f0, x0.to_vec())];
    for i in 0..dim {
        if used >= budget {
            return;
        }
        let mut x = x0.to_vec();
        x[i] += 0.1;
        simplex.push((call(&x, &mut used), x));
    }
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(u, v)| u + t * (v - u)).collect() };

    while used < budget {
        simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
        if simplex[dim].0 - simplex[0].0 <= 1e-12 * (1.0 + simplex[0].0.abs()) {
            break;
        }
        let mut centroid = vec![0.0; dim];
        for (_, x) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let xr = lerp(&centroid, &worst.1, -1.0);
        let fr = call(&xr, &mut used);
        if fr < simplex[0].0 {
            let xe = lerp(&centroid, &worst.1, -2.0);
            let fe = if used < budget { call(&xe, &mut used) } else { f64::INFINITY };
            simplex[dim] = if fe < fr { (fe, xe) } else { (fr, xr) };
            continue;
        }
        if fr < simplex[dim - 1].0 {
            simplex[dim] = (fr, xr);
            continue;
        }
        if used >= budget {
            break;
        }
        // contract towards the better of the reflected and the worst point
        let xc = if fr < worst.0 { lerp(&centroid, &xr, 0.5) } else { lerp(&centroid, &worst.1, 0.5) };
        let fc = call(&xc, &mut used);
        if fc < worst.0.min(fr) {
            simplex[dim] = (fc, xc);
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].1.clone();
        for v in simplex.iter_mut().skip(1) {
            if used >= budget {
                return;
            }
            let x = lerp(&best, &v.1, 0.5);
            *v = (call(&x, &mut used), x);
        }
    }
}

/// Simultaneous-perturbation stochastic approximation with the usual gain
/// decay exponents.
fn spsa(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], budget: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let (a, c, big_a, alpha, gamma) = (0.05, 0.05, 10.0, 0.602, 0.101);
    let mut x = x0.to_vec();
    let mut used = 0;
    let mut k = 0usize;
    while used + 2 <= budget {
        let ak = a / (k as f64 + 1.0 + big_a).powf(alpha);
        let ck = c / (k as f64 + 1.0).powf(gamma);
        let delta: Vec<f64> = (0..x.len()).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
        let xp: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v + ck * d).collect();
        let xm: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v - ck * d).collect();
        let diff = f(&xp) - f(&xm);
        used += 2;
        for (v, d) in x.iter_mut().zip(&delta) {
            *v -= ak * diff / (2.0 * ck * d);
        }
        k += 1;
    }
    if used < budget {
        f(&x);
    }
}
