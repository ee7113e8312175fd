//! Noiseless statevector QAOA for the path QUBO.
//!
//! Basis index `k` encodes variable `b` as bit `(k >> b) & 1`, the same
//! node-major ordering the QUBO uses.

mod optimize;

pub use optimize::{optimize_params, OptimizedParams};

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tsp::{build_qubo, max_abs_distance, path_length, scaled, HamiltonianPath, QuboModel, TspError};

/// Most qubits the simulator will allocate.
pub const QUBIT_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QaoaError {
    #[error("{qubits} qubits exceeds the simulator cap of {cap}")]
    QubitCap { qubits: usize, cap: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid QAOA configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Tsp(#[from] TspError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    #[default]
    NelderMead,
    Spsa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaoaConfig {
    pub p: usize,
    pub shots: usize,
    pub optimizer: Optimizer,
    pub max_evals: usize,
    /// QUBO penalty as a multiple of the largest (scaled) distance; must
    /// exceed 1 for the valid paths to be the low-energy states.
    pub penalty_factor: f64,
    /// Share of `max_evals` spent first on linear-ramp schedules
    /// (4 parameters) before all `2p` angles are freed; 0 disables.
    pub ramp_fraction: f64,
    pub seed: u64,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self {
            p: 5,
            shots: 1000,
            optimizer: Optimizer::NelderMead,
            max_evals: 400,
            penalty_factor: 1.2,
            ramp_fraction: 0.5,
            seed: 0,
        }
    }
}

impl QaoaConfig {
    pub fn validate(&self) -> Result<(), QaoaError> {
        if self.p == 0 {
            return Err(QaoaError::InvalidConfig("p must be at least 1".into()));
        }
        if self.shots == 0 {
            return Err(QaoaError::InvalidConfig("shots must be at least 1".into()));
        }
        if self.max_evals == 0 {
            return Err(QaoaError::InvalidConfig("max_evals must be at least 1".into()));
        }
        if !(self.penalty_factor > 1.0 && self.penalty_factor.is_finite()) {
            return Err(QaoaError::InvalidConfig(format!("penalty_factor must exceed 1, got {}", self.penalty_factor)));
        }
        if !(0.0..1.0).contains(&self.ramp_fraction) {
            return Err(QaoaError::InvalidConfig(format!("ramp_fraction must lie in [0, 1), got {}", self.ramp_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostDiagonal {
    pub num_qubits: usize,
    pub values: Vec<f64>,
    /// Distinct values, so each layer needs one complex exponential per level
    /// rather than per amplitude.
    levels: Vec<f64>,
    level_of: Vec<u32>,
}

impl CostDiagonal {
    pub fn new(num_qubits: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), 1usize << num_qubits, "diagonal length must be 2^qubits");
        let mut levels = values.clone();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        let level_of = values
            .iter()
            .map(|v| levels.binary_search_by(|l| l.total_cmp(v)).expect("value is a level") as u32)
            .collect();
        Self { num_qubits, values, levels, level_of }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

pub fn cost_diagonal(q: &QuboModel) -> Result<CostDiagonal, QaoaError> {
    let nq = q.num_vars();
    if nq > QUBIT_CAP {
        return Err(QaoaError::QubitCap { qubits: nq, cap: QUBIT_CAP });
    }
    let values = (0..1usize << nq)
        .map(|k| crate::tsp::qubo::energy_unchecked(q, |b| (k >> b) & 1 == 1))
        .collect();
    Ok(CostDiagonal::new(nq, values))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub num_qubits: usize,
    pub amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn uniform(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let a = Complex64::new(1.0 / (dim as f64).sqrt(), 0.0);
        Self { num_qubits, amplitudes: vec![a; dim] }
    }

    pub fn basis(num_qubits: usize, k: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1usize << num_qubits];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { num_qubits, amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_phase(&mut self, gamma: f64, diag: &CostDiagonal) {
        let phases: Vec<Complex64> = diag
            .levels
            .iter()
            .map(|&c| {
                let (s, co) = (-gamma * c).sin_cos();
                Complex64::new(co, s)
            })
            .collect();
        for (a, &l) in self.amplitudes.iter_mut().zip(&diag.level_of) {
            *a *= phases[l as usize];
        }
    }

    /// `exp(-i beta X)` on every qubit. The low qubits are applied block by
    /// block so each block stays in cache; the arithmetic per amplitude is the
    /// same as qubit-by-qubit sweeps.
    pub fn apply_mixer(&mut self, beta: f64) {
        const BLOCK_QUBITS: usize = 10;
        let (s, c) = beta.sin_cos();
        let low = self.num_qubits.min(BLOCK_QUBITS);
        for block in self.amplitudes.chunks_mut(1 << low) {
            for b in 0..low {
                rotate_x(block, 1 << b, c, s);
            }
        }
        for b in low..self.num_qubits {
            rotate_x(&mut self.amplitudes, 1 << b, c, s);
        }
    }
}

/// One `exp(-i beta X)` on the qubit with the given stride.
fn rotate_x(amps: &mut [Complex64], stride: usize, c: f64, s: f64) {
    for pair in amps.chunks_mut(2 * stride) {
        let (lo, hi) = pair.split_at_mut(stride);
        for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a0, *a1);
            // -i s a = (s a.im, -s a.re)
            *a0 = Complex64::new(c * x.re + s * y.im, c * x.im - s * y.re);
            *a1 = Complex64::new(c * y.re + s * x.im, c * y.im - s * x.re);
        }
    }
}

/// The QAOA state after `gamma.len()` phase/mixer layers.
pub fn evolve(gamma: &[f64], beta: &[f64], diag: &CostDiagonal) -> Result<StateVector, QaoaError> {
    if gamma.len() != beta.len() {
        return Err(QaoaError::Dimension(format!("{} gammas but {} betas", gamma.len(), beta.len())));
    }
    let mut sv = StateVector::uniform(diag.num_qubits);
    for (&g, &b) in gamma.iter().zip(beta) {
        sv.apply_phase(g, diag);
        sv.apply_mixer(b);
    }
    Ok(sv)
}

pub fn expectation(sv: &StateVector, diag: &CostDiagonal) -> f64 {
    sv.amplitudes.iter().zip(&diag.values).map(|(a, &c)| a.norm_sqr() * c).sum()
}

/// Multinomial draw of `shots` measurements, keyed by basis index.
pub fn sample(sv: &StateVector, shots: usize, seed: u64) -> BTreeMap<usize, usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = WeightedIndex::new(sv.probabilities()).expect("a normalized state has positive weight");
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        *counts.entry(dist.sample(&mut rng)).or_insert(0) += 1;
    }
    counts
}

pub fn bits_of(k: usize, num_qubits: usize) -> Vec<bool> {
    (0..num_qubits).map(|b| (k >> b) & 1 == 1).collect()
}

/// Repairs an arbitrary `n x n` assignment into a visit order, making random
/// choices wherever a row or column has to be fixed.
pub fn postprocess(x: &[bool], seed: u64) -> Vec<usize> {
    postprocess_with(x, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub(crate) fn postprocess_with(x: &[bool], rng: &mut impl Rng) -> Vec<usize> {
    let n = (x.len() as f64).sqrt().round() as usize;
    assert_eq!(n * n, x.len(), "bitstring length must be a square");
    let mut m: Vec<Vec<bool>> = (0..n).map(|i| x[i * n..(i + 1) * n].to_vec()).collect();
    let row = |m: &Vec<Vec<bool>>, i: usize| (0..n).filter(|&p| m[i][p]).collect::<Vec<_>>();
    let col = |m: &Vec<Vec<bool>>, p: usize| (0..n).filter(|&i| m[i][p]).collect::<Vec<_>>();

    // keep one step per node
    for i in 0..n {
        let ones = row(&m, i);
        if ones.len() > 1 {
            let keep = *ones.choose(rng).unwrap();
            for p in ones {
                m[i][p] = p == keep;
            }
        }
    }
    // keep one node per step
    for p in 0..n {
        let ones = col(&m, p);
        if ones.len() > 1 {
            let keep = *ones.choose(rng).unwrap();
            for i in ones {
                m[i][p] = i == keep;
            }
        }
    }
    // unvisited nodes take free steps
    for i in 0..n {
        if row(&m, i).is_empty() {
            let free: Vec<usize> = (0..n).filter(|&p| col(&m, p).is_empty()).collect();
            let p = *free.choose(rng).expect("as many free steps as unvisited nodes");
            m[i][p] = true;
        }
    }
    // free steps take unvisited nodes
    for p in 0..n {
        if col(&m, p).is_empty() {
            let free: Vec<usize> = (0..n).filter(|&i| row(&m, i).is_empty()).collect();
            let i = *free.choose(rng).expect("as many unvisited nodes as free steps");
            m[i][p] = true;
        }
    }

    let mut sigma = vec![0; n];
    for (i, r) in m.iter().enumerate() {
        for (p, &on) in r.iter().enumerate() {
            if on {
                sigma[p] = i;
            }
        }
    }
    sigma
}

/// Outcome of one QAOA run on a distance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaRun {
    pub path: HamiltonianPath,
    pub params: OptimizedParams,
    /// Basis indices that reached the top count.
    pub modes: Vec<usize>,
    pub top_count: usize,
}

pub fn solve_tsp_qaoa(d: &[Vec<f64>], cfg: &QaoaConfig) -> Result<HamiltonianPath, QaoaError> {
    Ok(run_qaoa(d, cfg)?.path)
}

/// Scaled QUBO, optimized circuit, sampling and repair of every top-count
/// bitstring; the shortest repaired path (measured on `d`) wins.
pub fn run_qaoa(d: &[Vec<f64>], cfg: &QaoaConfig) -> Result<QaoaRun, QaoaError> {
    cfg.validate()?;
    let n = crate::tsp::check_square(d)?;
    if n * n > QUBIT_CAP {
        return Err(QaoaError::QubitCap { qubits: n * n, cap: QUBIT_CAP });
    }
    let ds = scaled(d);
    // max|ds| is 1 unless every distance is zero
    let scale = if max_abs_distance(&ds) > 0.0 { max_abs_distance(&ds) } else { 1.0 };
    let q = build_qubo(&ds, Some(cfg.penalty_factor * scale))?;
    let diag = cost_diagonal(&q)?;
    let params = optimize_params(&diag, cfg)?;
    let sv = evolve(&params.gamma, &params.beta, &diag)?;
    let counts = sample(&sv, cfg.shots, cfg.seed ^ 0x5eed_5a3b_1e5c_0de5);
    let top_count = *counts.values().max().expect("at least one shot");
    let modes: Vec<usize> = counts.iter().filter(|&(_, &c)| c == top_count).map(|(&k, _)| k).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0fe2_a11c_e5e1_ec75);
    let mut best: Option<HamiltonianPath> = None;
    for &k in &modes {
        let sigma = postprocess_with(&bits_of(k, diag.num_qubits), &mut rng);
        let total = path_length(d, &sigma)?;
        if best.as_ref().is_none_or(|b| total < b.total) {
            best = Some(HamiltonianPath { sigma, total });
        }
    }
    Ok(QaoaRun {
        path: best.expect("at least one mode"),
        params,
        modes,
        top_count,
    })
}
