//! Candidate partitions of the piece set from single-linkage agglomeration
//! on the incompatibility matrix.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::geometry::Rect;

/// What to do when the closest admissible pair would exceed the size cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergePolicy {
    /// Skip that merge and keep looking for the next closest pair.
    #[default]
    Skip,
    /// Stop agglomerating altogether.
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Sorted clusters, ordered by smallest member.
    pub clusters: Vec<Vec<usize>>,
    pub d_max: f64,
    pub n_max: usize,
}

impl Partition {
    /// Checks the partition covers `0..n` exactly once within the size cap.
    pub fn is_valid(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for c in &self.clusters {
            if c.is_empty() || c.len() > self.n_max {
                return false;
            }
            for &i in c {
                if i >= n || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn linkage(gi: &[Vec<f64>], a: &[usize], b: &[usize]) -> f64 {
    let mut m = f64::INFINITY;
    for &i in a {
        for &j in b {
            m = m.min(gi[i][j]);
        }
    }
    m
}

/// Agglomerates singletons by smallest single-linkage distance while it stays
/// within `d_max`. Ties go to the pair of clusters with the smallest
/// (first member, first member).
pub fn single_linkage(gi: &[Vec<f64>], d_max: f64, n_max: usize, policy: MergePolicy) -> Partition {
    let n = gi.len();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let fits = clusters[a].len() + clusters[b].len() <= n_max;
                if policy == MergePolicy::Skip && !fits {
                    continue;
                }
                let l = linkage(gi, &clusters[a], &clusters[b]);
                if l <= d_max && best.is_none_or(|(bl, _, _)| l < bl) {
                    best = Some((l, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        if clusters[a].len() + clusters[b].len() > n_max {
            break;
        }
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
        clusters[a].sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    Partition { clusters, d_max, n_max }
}

/// Sorted, deduplicated off-diagonal entries.
pub fn thresholds(gi: &[Vec<f64>]) -> Vec<f64> {
    let mut t: Vec<f64> = Vec::new();
    for (i, row) in gi.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if i < j {
                t.push(v);
            }
        }
    }
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

/// Every distinct partition over the threshold sweep (outer loop) and
/// `n_max_values` (inner loop), in first-seen order. `thresholds` defaults to
/// all off-diagonal values of `gi`.
pub fn enumerate_partitions(gi: &[Vec<f64>], n_max_values: &[usize], thresholds: Option<&[f64]>, policy: MergePolicy) -> Vec<Partition> {
    let owned;
    let ts: &[f64] = match thresholds {
        Some(t) => t,
        None => {
            owned = self::thresholds(gi);
            &owned
        }
    };
    let ts: &[f64] = if ts.is_empty() { &[0.0] } else { ts };
    let mut seen: HashSet<Vec<Vec<usize>>> = HashSet::new();
    let mut out = Vec::new();
    for &t in ts {
        for &k in n_max_values {
            let p = single_linkage(gi, t, k.max(1), policy);
            if seen.insert(p.clusters.clone()) {
                out.push(p);
            }
        }
    }
    out
}

/// Total area of the cluster bounding boxes.
pub fn partition_penalty(boxes: &[Rect]) -> f64 {
    boxes.iter().map(Rect::area).sum()
}

/// The `keep` lowest-penalty items, ascending, ties in input order.
pub fn filter_partitions<T>(mut scored: Vec<(T, f64)>, keep: usize) -> Vec<(T, f64)> {
    scored.sort_by(|a, b| a.1.total_cmp(&b.1));
    scored.truncate(keep);
    scored
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gi3() -> Vec<Vec<f64>> {
        vec![vec![0.0, 0.1, 0.5], vec![0.1, 0.0, 0.6], vec![0.5, 0.6, 0.0]]
    }

    #[test]
    fn single_linkage_examples() {
        let gi = gi3();
        assert_eq!(single_linkage(&gi, 0.05, 4, MergePolicy::Skip).clusters, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(single_linkage(&gi, 1.0, 1, MergePolicy::Skip).clusters, vec![vec![0], vec![1], vec![2]]);
        assert_eq!(single_linkage(&gi, 0.2, 4, MergePolicy::Skip).clusters, vec![vec![0, 1], vec![2]]);
        assert_eq!(single_linkage(&gi, 0.5, 4, MergePolicy::Skip).clusters, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn skip_versus_stop() {
        // 0-1 closest, then {0,1}-2 would exceed the cap, but 2-3 still fits
        let gi = vec![
            vec![0.0, 0.1, 0.2, 0.9],
            vec![0.1, 0.0, 0.9, 0.9],
            vec![0.2, 0.9, 0.0, 0.3],
            vec![0.9, 0.9, 0.3, 0.0],
        ];
        assert_eq!(single_linkage(&gi, 1.0, 2, MergePolicy::Skip).clusters, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(single_linkage(&gi, 1.0, 2, MergePolicy::Stop).clusters, vec![vec![0, 1], vec![2], vec![3]]);
    }

    #[test]
    fn enumerate_examples() {
        let one = enumerate_partitions(&[vec![0.0]], &[1], None, MergePolicy::Skip);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].clusters, vec![vec![0]]);

        // identical pieces: exactly the size-capped agglomerations
        let gi = vec![vec![0.0; 3]; 3];
        let ps = enumerate_partitions(&gi, &[1, 2, 3], None, MergePolicy::Skip);
        let got: Vec<_> = ps.iter().map(|p| p.clusters.clone()).collect();
        assert_eq!(got, vec![vec![vec![0], vec![1], vec![2]], vec![vec![0, 1], vec![2]], vec![vec![0, 1, 2]]]);
    }

    #[test]
    fn penalty_and_filter() {
        assert_eq!(partition_penalty(&[Rect::new(0.0, 0.0, 2.0, 3.0)]), 6.0);
        assert_eq!(partition_penalty(&[Rect::new(0.0, 0.0, 1.0, 1.0), Rect::new(5.0, 5.0, 2.0, 2.0)]), 5.0);
        let f = filter_partitions(vec![("a", 5.0), ("b", 3.0), ("c", 9.0)], 1);
        assert_eq!(f, vec![("b", 3.0)]);
        let all = filter_partitions(vec![("a", 5.0), ("b", 3.0), ("c", 3.0)], 10);
        assert_eq!(all, vec![("b", 3.0), ("c", 3.0), ("a", 5.0)]);
    }

    fn sym_matrix(n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        proptest::collection::vec(0.0f64..1.0, n * n).prop_map(move |v| {
            let mut m = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    m[i][j] = v[i * n + j];
                    m[j][i] = v[i * n + j];
                }
            }
            m
        })
    }

    proptest! {
        #[test]
        fn monotone_in_threshold(gi in sym_matrix(7), a in 0.0f64..1.0, b in 0.0f64..1.0, k in 1usize..5) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let p_lo = single_linkage(&gi, lo, k, MergePolicy::Skip);
            let p_hi = single_linkage(&gi, hi, k, MergePolicy::Skip);
            prop_assert!(p_hi.clusters.len() <= p_lo.clusters.len());
        }

        #[test]
        fn partitions_are_valid_and_admissible(gi in sym_matrix(6)) {
            let ps = enumerate_partitions(&gi, &[1, 2, 3, 4], None, MergePolicy::Skip);
            let mut seen = HashSet::new();
            for p in &ps {
                prop_assert!(p.is_valid(6));
                prop_assert!(seen.insert(p.clusters.clone()));
                for c in p.clusters.iter().filter(|c| c.len() > 1) {
                    let ok = c.iter().any(|&i| c.iter().any(|&j| i != j && gi[i][j] <= p.d_max));
                    prop_assert!(ok);
                }
            }
        }
    }
}
