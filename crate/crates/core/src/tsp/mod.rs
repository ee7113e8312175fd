//! Shortest open Hamiltonian paths: exhaustive search, the QUBO encoding used
//! by the quantum solvers, and the optimality score.

pub(crate) mod qubo;

pub use qubo::{build_qubo, decode, encode, qubo_energy, QuboModel};

use log::debug;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::fsum;

/// Largest instance `brute_force` accepts unless told otherwise.
pub const BRUTE_FORCE_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TspError {
    #[error("distance matrix must be square and non-empty")]
    NotSquare,
    #[error("visit order is not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("{n} nodes exceeds the brute-force limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("penalty {a} must exceed the largest distance {max}")]
    PenaltyTooSmall { a: f64, max: f64 },
    #[error("bitstring has {got} bits, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianPath {
    pub sigma: Vec<usize>,
    pub total: f64,
}

impl HamiltonianPath {
    pub fn new(d: &[Vec<f64>], sigma: Vec<usize>) -> Result<Self, TspError> {
        let total = path_length(d, &sigma)?;
        Ok(Self { sigma, total })
    }
}

pub(crate) fn check_square(d: &[Vec<f64>]) -> Result<usize, TspError> {
    let n = d.len();
    if n == 0 || d.iter().any(|row| row.len() != n) {
        return Err(TspError::NotSquare);
    }
    Ok(n)
}

pub fn is_permutation(sigma: &[usize], n: usize) -> bool {
    if sigma.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in sigma {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// Total distance of the open path visiting `sigma` in order.
pub fn path_length(d: &[Vec<f64>], sigma: &[usize]) -> Result<f64, TspError> {
    let n = check_square(d)?;
    if !is_permutation(sigma, n) {
        return Err(TspError::NotPermutation(n));
    }
    Ok(fsum(sigma.windows(2).map(|w| d[w[0]][w[1]])))
}

pub fn next_permutation(v: &mut [usize]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Visits every undirected path once, as the orientation whose first node is
/// smaller than its last; permutations come in lexicographic order.
fn for_each_path(n: usize, mut f: impl FnMut(&[usize])) {
    let mut sigma: Vec<usize> = (0..n).collect();
    loop {
        if n < 2 || sigma[0] < sigma[n - 1] {
            f(&sigma);
        }
        if !next_permutation(&mut sigma) {
            break;
        }
    }
}

pub fn brute_force(d: &[Vec<f64>]) -> Result<HamiltonianPath, TspError> {
    brute_force_with_limit(d, BRUTE_FORCE_LIMIT)
}

/// Exact shortest path. Of equally short paths the lexicographically smallest
/// visit order wins.
pub fn brute_force_with_limit(d: &[Vec<f64>], limit: usize) -> Result<HamiltonianPath, TspError> {
    let n = check_square(d)?;
    if n > limit {
        return Err(TspError::TooLarge { n, limit });
    }
    let mut best: Option<HamiltonianPath> = None;
    for_each_path(n, |sigma| {
        let total = fsum(sigma.windows(2).map(|w| d[w[0]][w[1]]));
        if best.as_ref().is_none_or(|b| total < b.total) {
            best = Some(HamiltonianPath { sigma: sigma.to_vec(), total });
        }
    });
    Ok(best.expect("at least one path"))
}

/// Shortest and longest total over all Hamiltonian paths.
pub fn path_extremes(d: &[Vec<f64>]) -> Result<(f64, f64), TspError> {
    let n = check_square(d)?;
    if n > BRUTE_FORCE_LIMIT {
        return Err(TspError::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for_each_path(n, |sigma| {
        let total = fsum(sigma.windows(2).map(|w| d[w[0]][w[1]]));
        lo = lo.min(total);
        hi = hi.max(total);
    });
    Ok((lo, hi))
}

/// 1 at the shortest path, 0 at the longest.
pub fn optimality(d: &[Vec<f64>], sigma: &[usize]) -> Result<f64, TspError> {
    let total = path_length(d, sigma)?;
    let (lo, hi) = path_extremes(d)?;
    if hi <= lo {
        debug!("all paths have length {lo}; optimality is 1");
        return Ok(1.0);
    }
    Ok((1.0 - (total - lo) / (hi - lo)).clamp(0.0, 1.0))
}

/// Largest absolute off-diagonal entry.
pub fn max_abs_distance(d: &[Vec<f64>]) -> f64 {
    let mut m: f64 = 0.0;
    for (i, row) in d.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if i != j {
                m = m.max(v.abs());
            }
        }
    }
    m
}

/// `d / max|d|`, or `d` itself when all distances are zero.
pub fn scaled(d: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = max_abs_distance(d);
    if m == 0.0 {
        return d.to_vec();
    }
    d.iter().map(|row| row.iter().map(|v| v / m).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Vec<Vec<f64>> {
        vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 2.0], vec![5.0, 2.0, 0.0]]
    }

    #[test]
    fn path_length_examples() {
        assert_eq!(path_length(&[vec![0.0]], &[0]).unwrap(), 0.0);
        assert_eq!(path_length(&tri(), &[0, 1, 2]).unwrap(), 3.0);
        assert_eq!(path_length(&tri(), &[2, 1, 0]).unwrap(), 3.0);
        assert_eq!(path_length(&tri(), &[0, 0, 2]), Err(TspError::NotPermutation(3)));
        assert_eq!(path_length(&tri(), &[0, 1]), Err(TspError::NotPermutation(3)));
    }

    #[test]
    fn brute_force_examples() {
        let p = brute_force(&tri()).unwrap();
        assert_eq!(p.sigma, vec![0, 1, 2]);
        assert_eq!(p.total, 3.0);
        let two = vec![vec![0.0, 4.0], vec![4.0, 0.0]];
        assert_eq!(brute_force(&two).unwrap(), HamiltonianPath { sigma: vec![0, 1], total: 4.0 });
        let big = vec![vec![0.0; 11]; 11];
        assert_eq!(brute_force(&big), Err(TspError::TooLarge { n: 11, limit: 10 }));
    }

    #[test]
    fn ties_pick_the_smallest_order() {
        let d = vec![vec![0.0; 4]; 4];
        assert_eq!(brute_force(&d).unwrap().sigma, vec![0, 1, 2, 3]);
    }

    #[test]
    fn extremes_and_optimality() {
        assert_eq!(path_extremes(&tri()).unwrap(), (3.0, 7.0));
        let c = vec![vec![0.0, 2.0, 2.0], vec![2.0, 0.0, 2.0], vec![2.0, 2.0, 0.0]];
        assert_eq!(path_extremes(&c).unwrap(), (4.0, 4.0));
        assert_eq!(optimality(&c, &[1, 0, 2]).unwrap(), 1.0);
        assert_eq!(optimality(&tri(), &[1, 0, 2]).unwrap(), 0.25);
        assert_eq!(optimality(&tri(), &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(optimality(&tri(), &[0, 2, 1]).unwrap(), 0.0);
    }

    #[test]
    fn lexicographic_permutations() {
        let mut v = vec![0, 1, 2];
        let mut all = vec![v.clone()];
        while next_permutation(&mut v) {
            all.push(v.clone());
        }
        assert_eq!(all.len(), 6);
        assert_eq!(all[1], vec![0, 2, 1]);
        assert_eq!(all[5], vec![2, 1, 0]);
    }
}
