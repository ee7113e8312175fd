//! Binary encoding of the open-path TSP.
//!
//! Variable `i * n + p` is 1 when node `i` is visited at step `p`. The
//! objective is the path length plus `A` times the squared violation of
//! "each node once" and "each step once".

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{check_square, max_abs_distance, TspError};
use crate::numeric::fsum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    pub n: usize,
    pub linear: Vec<f64>,
    /// `(u, v, coefficient)` with `u < v`, sorted and without duplicates.
    pub quadratic: Vec<(usize, usize, f64)>,
    pub penalty: f64,
    /// Constant term `2 A n`, rounded.
    pub offset: f64,
    /// `2 A n - offset`, exact.
    pub offset_residual: f64,
}

impl QuboModel {
    pub fn num_vars(&self) -> usize {
        self.n * self.n
    }
}

/// Expands the penalised objective. `a` defaults to `2 max|d| + 1`.
pub fn build_qubo(d: &[Vec<f64>], a: Option<f64>) -> Result<QuboModel, TspError> {
    let n = check_square(d)?;
    let max = max_abs_distance(d);
    let a = a.unwrap_or(2.0 * max + 1.0);
    if !(a > max) || !a.is_finite() {
        return Err(TspError::PenaltyTooSmall { a, max });
    }
    let var = |i: usize, p: usize| i * n + p;

    // A (1 - Σ x)^2 = A - A Σ x + 2A Σ_{u<v} x_u x_v for binary x, once per
    // node row and once per step column.
    let linear = vec![-2.0 * a; n * n];
    let mut quad: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add = |u: usize, v: usize, c: f64| {
        let key = if u < v { (u, v) } else { (v, u) };
        *quad.entry(key).or_insert(0.0) += c;
    };
    for i in 0..n {
        for p in 0..n {
            for q in p + 1..n {
                add(var(i, p), var(i, q), 2.0 * a);
                add(var(p, i), var(q, i), 2.0 * a);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            for p in 0..n.saturating_sub(1) {
                add(var(i, p), var(j, p + 1), d[i][j]);
            }
        }
    }
    let two_a = 2.0 * a;
    let nf = n as f64;
    let offset = two_a * nf;
    let offset_residual = two_a.mul_add(nf, -offset);
    Ok(QuboModel {
        n,
        linear,
        quadratic: quad.into_iter().filter(|&(_, c)| c != 0.0).map(|((u, v), c)| (u, v, c)).collect(),
        penalty: a,
        offset,
        offset_residual,
    })
}

/// Objective value of `x`, summed exactly so that valid paths reproduce
/// their path length bit for bit.
pub fn qubo_energy(q: &QuboModel, x: &[bool]) -> Result<f64, TspError> {
    if x.len() != q.num_vars() {
        return Err(TspError::LengthMismatch { expected: q.num_vars(), got: x.len() });
    }
    Ok(energy_unchecked(q, |u| x[u]))
}

pub(crate) fn energy_unchecked(q: &QuboModel, bit: impl Fn(usize) -> bool) -> f64 {
    let lin = q.linear.iter().enumerate().filter(|&(u, _)| bit(u)).map(|(_, &c)| c);
    let quad = q.quadratic.iter().filter(|&&(u, v, _)| bit(u) && bit(v)).map(|&(_, _, c)| c);
    fsum([q.offset, q.offset_residual].into_iter().chain(lin).chain(quad))
}

/// The visit order encoded by `x`, if `x` is a permutation matrix.
pub fn decode(x: &[bool]) -> Option<Vec<usize>> {
    let n = (x.len() as f64).sqrt().round() as usize;
    if n * n != x.len() || n == 0 {
        return None;
    }
    let mut sigma = vec![usize::MAX; n];
    for i in 0..n {
        let mut steps = (0..n).filter(|&p| x[i * n + p]);
        let p = steps.next()?;
        if steps.next().is_some() || sigma[p] != usize::MAX {
            return None;
        }
        sigma[p] = i;
    }
    Some(sigma)
}

pub fn encode(sigma: &[usize]) -> Vec<bool> {
    let n = sigma.len();
    let mut x = vec![false; n * n];
    for (p, &i) in sigma.iter().enumerate() {
        x[i * n + p] = true;
    }
    x
}
