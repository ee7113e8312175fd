//! Cluster packing, rectangle packing of the cluster boxes, and the local and
//! global refinement passes on the final layout.

mod rect;
mod refine;

pub use rect::{pack_rectangles, relax_and_pack, satisfies_disjunctions, tighten_packing, RectPlacement, RelaxedPacking};
pub use refine::{global_optimize, local_optimize};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compat::{DiscretizationConfig, NffTables};
use crate::geometry::{bounding_box, contains, overlap, sin_cos_deg, Polygon, Pose, Rect};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PackingError {
    #[error("piece {piece} has no overlap-free placement next to piece {prev}")]
    NoClearPlacement { piece: usize, prev: usize },
    #[error("empty cluster")]
    EmptyCluster,
}

/// Pieces of one cluster posed relative to each other; `bbox` is anchored at
/// the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterPacking {
    pub pieces: Vec<usize>,
    pub poses: Vec<Pose>,
    pub bbox: Rect,
}

impl ClusterPacking {
    pub fn area(&self) -> f64 {
        self.bbox.area()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub height: f64,
    pub length: f64,
    /// One absolute pose per piece index.
    pub poses: Vec<Pose>,
}

impl Layout {
    pub fn posed(&self, pieces: &[Polygon]) -> Vec<Polygon> {
        pieces.iter().zip(&self.poses).map(|(p, &pose)| p.posed(pose)).collect()
    }

    pub fn container(&self) -> Rect {
        Rect::new(0.0, 0.0, self.length, self.height)
    }

    /// Builds a layout whose length is the rightmost piece extent.
    pub fn from_poses(pieces: &[Polygon], height: f64, poses: Vec<Pose>) -> Self {
        let length = right_extent(pieces.iter().zip(&poses).map(|(p, &pose)| p.posed(pose)));
        Self { height, length, poses }
    }
}

pub(crate) fn right_extent(posed: impl IntoIterator<Item = Polygon>) -> f64 {
    posed.into_iter().map(|p| p.bbox().right()).fold(0.0, f64::max)
}

/// Coordinate slack for containment checks, relative to the container size.
pub(crate) fn containment_tol(layout: &Layout) -> f64 {
    1e-9 * (layout.length + layout.height).max(1.0)
}

fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - 1e-12 * incumbent.abs()
}

/// Places the pieces of `order` one after another, each orbiting its
/// predecessor: for every θ the no-fit table gives a radius and relative
/// orientation, the radius grows by Δr until the piece clears everything
/// already placed, and the θ giving the smallest running bounding box wins
/// (first θ on ties).
pub fn greedy_pack(pieces: &[Polygon], order: &[usize], tables: &NffTables, cfg: &DiscretizationConfig, eps: f64) -> Result<ClusterPacking, PackingError> {
    let (&first, rest) = order.split_first().ok_or(PackingError::EmptyCluster)?;
    let mut poses = vec![Pose::new(0.0, 0.0, 0.0)];
    let mut placed = vec![pieces[first].posed(poses[0])];
    let mut bbox = placed[0].bbox();

    for (k, &idx) in rest.iter().enumerate() {
        let prev_idx = order[k];
        let prev = poses[k];
        let table = tables.get(prev_idx, idx);
        let moving = &pieces[idx];
        let reach = poses
            .iter()
            .zip(order)
            .map(|(p, &j)| (p.x - prev.x).hypot(p.y - prev.y) + pieces[j].circumradius())
            .fold(0.0, f64::max);
        let r_limit = reach + moving.circumradius() + cfg.r_step;

        let mut best: Option<(f64, Pose, Polygon, Rect)> = None;
        for (ti, &theta) in cfg.theta.iter().enumerate() {
            let e = table.entry(ti);
            let (s, c) = sin_cos_deg(prev.angle + theta);
            let mut r = e.r;
            loop {
                let pose = Pose::new(prev.x + r * c, prev.y + r * s, prev.angle + e.phi);
                let cand = moving.posed(pose);
                if placed.iter().all(|q| !overlap(q, &cand, eps)) {
                    let b = bbox.union(&cand.bbox());
                    if best.as_ref().is_none_or(|(a, ..)| improves(b.area(), *a)) {
                        best = Some((b.area(), pose, cand, b));
                    }
                    break;
                }
                r += cfg.r_step;
                if r > r_limit {
                    break;
                }
            }
        }
        let (_, pose, cand, b) = best.ok_or(PackingError::NoClearPlacement { piece: idx, prev: prev_idx })?;
        poses.push(pose);
        placed.push(cand);
        bbox = b;
    }

    let poses = poses.into_iter().map(|p| Pose::new(p.x - bbox.x, p.y - bbox.y, p.angle)).collect();
    Ok(ClusterPacking {
        pieces: order.to_vec(),
        poses,
        bbox: Rect::new(0.0, 0.0, bbox.length, bbox.height),
    })
}

/// Greedy packing of `order` and of its reverse; the smaller box wins, the
/// forward order on ties.
pub fn pack_cluster_best(pieces: &[Polygon], order: &[usize], tables: &NffTables, cfg: &DiscretizationConfig, eps: f64) -> Result<ClusterPacking, PackingError> {
    let fwd = greedy_pack(pieces, order, tables, cfg, eps)?;
    if order.len() < 2 {
        return Ok(fwd);
    }
    let rev_order: Vec<usize> = order.iter().rev().copied().collect();
    let rev = greedy_pack(pieces, &rev_order, tables, cfg, eps)?;
    Ok(if improves(rev.area(), fwd.area()) { rev } else { fwd })
}

/// Cluster poses mapped into a container slot whose bottom-left corner is
/// `(x, y)`, turning the box a quarter turn counter-clockwise if `rotated`.
pub fn place_cluster(cp: &ClusterPacking, x: f64, y: f64, rotated: bool) -> Vec<(usize, Pose)> {
    cp.pieces
        .iter()
        .zip(&cp.poses)
        .map(|(&i, p)| {
            let pose = if rotated {
                Pose::new(x + cp.bbox.height - p.y, y + p.x, p.angle + 90.0)
            } else {
                Pose::new(x + p.x, y + p.y, p.angle)
            };
            (i, pose)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutMetrics {
    pub length: f64,
    pub waste_area: f64,
    pub waste_ratio: f64,
}

pub fn layout_metrics(pieces: &[Polygon], layout: &Layout) -> LayoutMetrics {
    let total = layout.height * layout.length;
    let used: f64 = pieces.iter().map(Polygon::area).sum();
    let waste_area = total - used;
    LayoutMetrics {
        length: layout.length,
        waste_area,
        waste_ratio: if total > 0.0 { waste_area / total } else { 0.0 },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Containment { piece: usize },
    Overlap { a: usize, b: usize },
}

/// Every containment and pairwise overlap violation of `layout`.
pub fn validate_layout(pieces: &[Polygon], layout: &Layout, eps: f64) -> Vec<Violation> {
    let posed = layout.posed(pieces);
    let container = layout.container();
    let tol = containment_tol(layout);
    let mut out = Vec::new();
    for (i, p) in posed.iter().enumerate() {
        if !contains(&container, p, tol) {
            out.push(Violation::Containment { piece: i });
        }
    }
    for i in 0..posed.len() {
        for j in i + 1..posed.len() {
            if overlap(&posed[i], &posed[j], eps) {
                out.push(Violation::Overlap { a: i, b: j });
            }
        }
    }
    out
}

/// Bounding box of a cluster's posed pieces.
pub fn cluster_bbox(pieces: &[Polygon], cp: &ClusterPacking) -> Rect {
    let posed: Vec<Polygon> = cp.pieces.iter().zip(&cp.poses).map(|(&i, &p)| pieces[i].posed(p)).collect();
    bounding_box(&posed).expect("cluster has pieces")
}
