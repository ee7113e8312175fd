//! Compaction passes on a complete layout.

use std::f64::consts::FRAC_1_SQRT_2;

use log::debug;

use super::{containment_tol, right_extent, Layout};
use crate::geometry::{contains, overlap, Polygon, Pose, Rect};

/// Leftwards/downwards unit moves, tried in this order.
const DIRECTIONS: [(f64, f64); 4] = [(-1.0, 0.0), (-FRAC_1_SQRT_2, -FRAC_1_SQRT_2), (-FRAC_1_SQRT_2, FRAC_1_SQRT_2), (0.0, -1.0)];

fn clear_of_others(posed: &[Polygon], skip: usize, cand: &Polygon, eps: f64) -> bool {
    posed.iter().enumerate().all(|(j, q)| j == skip || !overlap(q, cand, eps))
}

/// Slides pieces by `delta_r` steps towards the bottom-left while they stay
/// inside the container and clear of each other, bottom-left pieces first,
/// until a whole pass moves nothing. Orientations are left untouched.
pub fn local_optimize(pieces: &[Polygon], layout: &Layout, delta_r: f64, eps: f64) -> Layout {
    let container = layout.container();
    let tol = containment_tol(layout);
    let mut poses = layout.poses.clone();
    let mut posed = layout.posed(pieces);
    let mut moves = 0usize;
    loop {
        let mut order: Vec<usize> = (0..posed.len()).collect();
        let key = |i: usize| {
            let b = posed[i].bbox();
            b.x + b.y
        };
        order.sort_by(|&a, &b| key(a).total_cmp(&key(b)));
        let mut moved = false;
        for i in order {
            'piece: loop {
                for (ux, uy) in DIRECTIONS {
                    let (dx, dy) = (delta_r * ux, delta_r * uy);
                    let cand = posed[i].translated(dx, dy);
                    if contains(&container, &cand, tol) && clear_of_others(&posed, i, &cand, eps) {
                        poses[i] = Pose::new(poses[i].x + dx, poses[i].y + dy, poses[i].angle);
                        posed[i] = cand;
                        moved = true;
                        moves += 1;
                        continue 'piece;
                    }
                }
                break;
            }
        }
        if !moved {
            break;
        }
    }
    debug!("local optimization applied {moves} moves");
    let length = right_extent(posed).min(layout.length);
    Layout { height: layout.height, length, poses }
}

fn rightmost(posed: &[Polygon]) -> usize {
    let mut best = 0;
    for (i, p) in posed.iter().enumerate() {
        if p.bbox().right() > posed[best].bbox().right() {
            best = i;
        }
    }
    best
}

/// First grid position (columns left to right, each bottom to top) and
/// orientation that fits `piece` without overlap and ends left of `limit`.
fn find_gap(
    piece: &Polygon,
    others: &[Polygon],
    skip: usize,
    container: &Rect,
    divisions: usize,
    orientations: &[f64],
    limit: f64,
    tol: f64,
    eps: f64,
) -> Option<(Pose, Polygon)> {
    let shapes: Vec<(f64, Polygon, Rect)> = orientations
        .iter()
        .map(|&a| {
            let p = piece.posed(Pose::new(0.0, 0.0, a));
            let b = p.bbox();
            (a, p, b)
        })
        .collect();
    let (gx, gy) = (container.length / divisions as f64, container.height / divisions as f64);
    for ix in 0..=divisions {
        let x = ix as f64 * gx;
        for iy in 0..=divisions {
            let y = iy as f64 * gy;
            for (a, p, b) in &shapes {
                if x + b.length >= limit || y + b.height > container.top() + tol {
                    continue;
                }
                let (dx, dy) = (x - b.x, y - b.y);
                let cand = p.translated(dx, dy);
                if contains(container, &cand, tol) && clear_of_others(others, skip, &cand, eps) {
                    return Some((Pose::new(dx, dy, *a), cand));
                }
            }
        }
    }
    None
}

/// Repeatedly moves the rightmost piece into the first gap (on a
/// `divisions x divisions` grid over the container, any orientation in
/// `orientations`) where its right edge ends further left, then compacts
/// with [`local_optimize`]. Stops when the rightmost piece has no such gap
/// or after `max_relocations` moves.
pub fn global_optimize(
    pieces: &[Polygon],
    layout: &Layout,
    divisions: usize,
    orientations: &[f64],
    delta_r: f64,
    eps: f64,
    max_relocations: usize,
) -> Layout {
    let mut current = layout.clone();
    for _ in 0..max_relocations {
        let posed = current.posed(pieces);
        let i = rightmost(&posed);
        let limit = posed[i].bbox().right();
        let container = current.container();
        let tol = containment_tol(&current);
        let Some((pose, _)) = find_gap(&pieces[i], &posed, i, &container, divisions.max(1), orientations, limit, tol, eps) else {
            break;
        };
        debug!("relocating piece {i} (right edge {limit:.3})");
        current.poses[i] = pose;
        current.length = right_extent(current.posed(pieces)).min(current.length);
        current = local_optimize(pieces, &current, delta_r, eps);
    }
    current
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point;
    use crate::packing::validate_layout;

    fn rect(l: f64, h: f64) -> Polygon {
        Polygon::new(vec![Point::new(0.0, 0.0), Point::new(l, 0.0), Point::new(l, h), Point::new(0.0, h)]).unwrap()
    }

    #[test]
    fn lone_piece_slides_to_the_corner() {
        let pieces = vec![rect(1.0, 1.0)];
        let layout = Layout { height: 10.0, length: 10.0, poses: vec![Pose::new(7.3, 4.1, 0.0)] };
        let out = local_optimize(&pieces, &layout, 0.1, 1e-9);
        let b = pieces[0].posed(out.poses[0]).bbox();
        assert!(b.x < 0.1 + 1e-9 && b.y < 0.1 + 1e-9, "{b:?}");
        assert!(out.length <= layout.length);
    }

    #[test]
    fn flush_layout_is_a_fixpoint() {
        let pieces = vec![rect(1.0, 1.0), rect(1.0, 1.0)];
        let layout = Layout { height: 1.0, length: 2.0, poses: vec![Pose::new(0.5, 0.5, 0.0), Pose::new(1.5, 0.5, 0.0)] };
        assert_eq!(local_optimize(&pieces, &layout, 0.1, 1e-9), layout);
        assert_eq!(global_optimize(&pieces, &layout, 100, &[0.0, 90.0], 0.1, 1e-9, 50), layout);
    }

    #[test]
    fn rightmost_piece_drops_into_a_pocket() {
        // two 2x1 bars leave a 1x1 pocket at the top left; a unit square sits
        // to the right of everything
        let pieces = vec![rect(2.0, 1.0), rect(1.0, 1.0), rect(1.0, 1.0)];
        let layout = Layout {
            height: 2.0,
            length: 3.0,
            poses: vec![Pose::new(1.0, 0.5, 0.0), Pose::new(1.5, 1.5, 0.0), Pose::new(2.5, 0.5, 0.0)],
        };
        assert!(validate_layout(&pieces, &layout, 1e-9).is_empty());
        let out = global_optimize(&pieces, &layout, 100, &[0.0], 0.25, 1e-9, 50);
        assert!(validate_layout(&pieces, &out, 1e-9).is_empty());
        assert!((out.length - 2.0).abs() < 1e-9, "{}", out.length);
    }
}
