//! Maximal-rectangles packer for the cluster boxes.

use serde::{Deserialize, Serialize};

use crate::geometry::Rect;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectPlacement {
    pub x: f64,
    pub y: f64,
    /// Quarter turn: the item occupies `height x length`.
    pub rotated: bool,
}

impl RectPlacement {
    pub fn extent(&self, (l, h): (f64, f64)) -> Rect {
        if self.rotated {
            Rect::new(self.x, self.y, h, l)
        } else {
            Rect::new(self.x, self.y, l, h)
        }
    }
}

fn tol(bin: (f64, f64)) -> f64 {
    1e-9 * (bin.0 + bin.1)
}

fn contains(outer: &Rect, inner: &Rect, t: f64) -> bool {
    inner.x >= outer.x - t && inner.y >= outer.y - t && inner.right() <= outer.right() + t && inner.top() <= outer.top() + t
}

/// Removes `used` from every free rectangle, keeping the maximal pieces.
fn split_free(free: &mut Vec<Rect>, used: &Rect, t: f64) {
    let mut out = Vec::with_capacity(free.len() + 4);
    for f in free.iter() {
        if !f.intersects(used) {
            out.push(*f);
            continue;
        }
        if used.x > f.x + t {
            out.push(Rect::new(f.x, f.y, used.x - f.x, f.height));
        }
        if used.right() < f.right() - t {
            out.push(Rect::new(used.right(), f.y, f.right() - used.right(), f.height));
        }
        if used.y > f.y + t {
            out.push(Rect::new(f.x, f.y, f.length, used.y - f.y));
        }
        if used.top() < f.top() - t {
            out.push(Rect::new(f.x, used.top(), f.length, f.top() - used.top()));
        }
    }
    let mut keep = vec![true; out.len()];
    for i in 0..out.len() {
        for j in 0..out.len() {
            if i != j && keep[j] && contains(&out[j], &out[i], 0.0) && (out[i] != out[j] || i > j) {
                keep[i] = false;
                break;
            }
        }
    }
    *free = out.into_iter().zip(keep).filter(|(_, k)| *k).map(|(r, _)| r).collect();
}

/// Search nodes allowed to the backtracking phase of [`pack_rectangles`].
const BACKTRACK_BUDGET: usize = 2000;

/// Packs `items` (`(length, height)` pairs) into a `bin = (L, H)` container.
///
/// Items go in order of decreasing area; each takes the free-rectangle corner
/// that keeps its right edge leftmost, then lowest. When that greedy pass
/// dead-ends, the remaining corners are tried depth first in the same score
/// order, within a fixed node budget. Returns `None` when no packing turns up.
pub fn pack_rectangles(items: &[(f64, f64)], bin: (f64, f64), allow_rotate: bool) -> Option<Vec<RectPlacement>> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| (items[b].0 * items[b].1).total_cmp(&(items[a].0 * items[a].1)));
    let mut search = Search {
        items,
        order: &order,
        allow_rotate,
        t: tol(bin),
        budget: BACKTRACK_BUDGET,
        out: vec![None; items.len()],
    };
    if !search.place(0, vec![Rect::new(0.0, 0.0, bin.0, bin.1)]) {
        return None;
    }
    Some(search.out.into_iter().map(|p| p.expect("every item placed")).collect())
}

struct Search<'a> {
    items: &'a [(f64, f64)],
    order: &'a [usize],
    allow_rotate: bool,
    t: f64,
    budget: usize,
    out: Vec<Option<RectPlacement>>,
}

impl Search<'_> {
    fn place(&mut self, depth: usize, free: Vec<Rect>) -> bool {
        let Some(&i) = self.order.get(depth) else {
            return true;
        };
        let (l, h) = self.items[i];
        let mut candidates: Vec<((f64, f64), RectPlacement)> = Vec::new();
        for f in &free {
            for rotated in [false, true] {
                if rotated && (!self.allow_rotate || l == h) {
                    continue;
                }
                let (w, z) = if rotated { (h, l) } else { (l, h) };
                if w <= f.length + self.t && z <= f.height + self.t {
                    candidates.push(((f.x + w, f.y), RectPlacement { x: f.x, y: f.y, rotated }));
                }
            }
        }
        // stable: equal scores keep free-list order
        candidates.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));
        candidates.dedup_by(|a, b| a.1 == b.1);
        for (_, p) in candidates {
            if self.budget == 0 {
                return false;
            }
            self.budget -= 1;
            let mut next = free.clone();
            split_free(&mut next, &p.extent(self.items[i]), self.t);
            self.out[i] = Some(p);
            if self.place(depth + 1, next) {
                return true;
            }
        }
        self.out[i] = None;
        false
    }
}

/// Checks the container bounds and, for every pair, that one of the four
/// separating inequalities holds.
pub fn satisfies_disjunctions(items: &[(f64, f64)], placements: &[RectPlacement], bin: (f64, f64)) -> bool {
    let t = tol(bin);
    let rects: Vec<Rect> = items.iter().zip(placements).map(|(&it, p)| p.extent(it)).collect();
    let inside = rects
        .iter()
        .all(|r| r.x >= -t && r.right() <= bin.0 + t && r.y >= -t && r.top() <= bin.1 + t);
    inside
        && (0..rects.len()).all(|i| {
            (i + 1..rects.len()).all(|j| {
                let (a, b) = (&rects[i], &rects[j]);
                a.right() <= b.x + t || b.right() <= a.x + t || a.top() <= b.y + t || b.top() <= a.y + t
            })
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedPacking {
    pub placements: Vec<RectPlacement>,
    /// Length of the bin that finally admitted every item.
    pub bin_length: f64,
    pub used_length: f64,
    pub used_height: f64,
    /// Number of ×1.05 enlargements applied.
    pub relaxations: usize,
}

/// Tries bins of height `height` and length `target · 1.05^k`, `k = 0..=cap`.
/// An infinite target starts from the sum of item lengths, which always fits
/// as one row. Returns `None` when some item is taller than the bin in every
/// allowed orientation, or when the cap runs out.
pub fn relax_and_pack(items: &[(f64, f64)], height: f64, target: f64, allow_rotate: bool, cap: usize) -> Option<RelaxedPacking> {
    let t = 1e-9 * height;
    let mut row = 0.0;
    for &(l, h) in items {
        if h <= height + t {
            row += l;
        } else if allow_rotate && l <= height + t {
            row += h;
        } else {
            return None;
        }
    }
    let start = if target.is_finite() { target } else { row };
    let mut bin_length = start;
    for k in 0..=cap {
        if let Some(placements) = pack_rectangles(items, (bin_length, height), allow_rotate) {
            let rects: Vec<Rect> = items.iter().zip(&placements).map(|(&it, p)| p.extent(it)).collect();
            return Some(RelaxedPacking {
                used_length: rects.iter().map(Rect::right).fold(0.0, f64::max),
                used_height: rects.iter().map(Rect::top).fold(0.0, f64::max),
                placements,
                bin_length,
                relaxations: k,
            });
        }
        bin_length *= 1.05;
    }
    None
}

/// Shortest bin length admitting `items`, found by bisection between the
/// area bound and the length `rp` already achieves. Returns the packing with
/// the least used length seen, `rp` itself if nothing shorter turns up.
pub fn tighten_packing(items: &[(f64, f64)], height: f64, rp: RelaxedPacking, allow_rotate: bool) -> RelaxedPacking {
    let t = 1e-9 * height;
    let area: f64 = items.iter().map(|(l, h)| l * h).sum();
    let widest = items
        .iter()
        .map(|&(l, h)| match (h <= height + t, allow_rotate && l <= height + t) {
            (true, true) => l.min(h),
            (true, false) => l,
            _ => h,
        })
        .fold(0.0, f64::max);
    let mut lo = (area / height).max(widest);
    let mut best = rp;
    for step in 0..24 {
        if best.used_length - lo <= 1e-4 * best.used_length {
            break;
        }
        let mid = if step == 0 { lo } else { 0.5 * (lo + best.used_length) };
        match pack_rectangles(items, (mid, height), allow_rotate) {
            Some(placements) => {
                let rects: Vec<Rect> = items.iter().zip(&placements).map(|(&it, p)| p.extent(it)).collect();
                let used = rects.iter().map(Rect::right).fold(0.0, f64::max);
                if used < best.used_length {
                    best = RelaxedPacking {
                        used_height: rects.iter().map(Rect::top).fold(0.0, f64::max),
                        used_length: used,
                        placements,
                        bin_length: mid,
                        relaxations: best.relaxations,
                    };
                } else {
                    break;
                }
            }
            None => lo = mid,
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_unit_squares() {
        let p = pack_rectangles(&[(1.0, 1.0), (1.0, 1.0)], (2.0, 1.0), false).unwrap();
        assert_eq!((p[0].x, p[0].y), (0.0, 0.0));
        assert_eq!((p[1].x, p[1].y), (1.0, 0.0));
    }

    #[test]
    fn rotation_only_when_allowed() {
        assert!(pack_rectangles(&[(2.0, 1.0)], (1.0, 2.0), false).is_none());
        let p = pack_rectangles(&[(2.0, 1.0)], (1.0, 2.0), true).unwrap();
        assert!(p[0].rotated);
    }

    #[test]
    fn relaxation() {
        let items = [(2.0, 1.0), (2.0, 1.0)];
        let r = relax_and_pack(&items, 2.0, 2.0, false, 10).unwrap();
        assert_eq!(r.relaxations, 0);
        assert_eq!(r.used_length, 2.0);

        let r = relax_and_pack(&items, 1.0, f64::INFINITY, false, 0).unwrap();
        assert_eq!(r.bin_length, 4.0);
        assert!(r.used_length <= r.bin_length);

        let r = relax_and_pack(&items, 1.0, 3.0, false, 20).unwrap();
        assert!(r.relaxations > 0 && r.bin_length >= 4.0 && r.used_length <= r.bin_length);

        assert!(relax_and_pack(&[(1.0, 3.0)], 2.0, f64::INFINITY, false, 5).is_none());
        assert!(relax_and_pack(&[(1.0, 3.0)], 2.0, f64::INFINITY, true, 5).is_some());
    }

    #[test]
    fn backtracking_finds_the_stacked_packing() {
        // greedy puts the middle box upright and strands the last one
        let items = [(400.0, 711.0), (485.0, 585.0), (200.0, 600.0)];
        let p = pack_rectangles(&items, (1000.0, 750.0), true).unwrap();
        assert!(satisfies_disjunctions(&items, &p, (1000.0, 750.0)));
        assert!(p[1].rotated && p[2].rotated);
        assert!(pack_rectangles(&items, (1000.0, 750.0), false).is_none());
    }

    #[test]
    fn tightening_shrinks_the_row_start() {
        let items = [(400.0, 711.0), (485.0, 585.0), (200.0, 600.0)];
        let rp = relax_and_pack(&items, 750.0, f64::INFINITY, true, 10).unwrap();
        assert_eq!(rp.used_length, 1085.0);
        let tight = tighten_packing(&items, 750.0, rp, true);
        assert_eq!(tight.used_length, 1000.0);
        assert!(satisfies_disjunctions(&items, &tight.placements, (tight.used_length, 750.0)));

        // already at the area bound: unchanged
        let squares = [(1.0, 1.0), (1.0, 1.0)];
        let rp = relax_and_pack(&squares, 1.0, f64::INFINITY, false, 0).unwrap();
        assert_eq!(tighten_packing(&squares, 1.0, rp.clone(), false), rp);
    }

    proptest! {
        #[test]
        fn placements_respect_the_constraint_system(
            items in proptest::collection::vec((1.0f64..50.0, 1.0f64..50.0), 1..12),
            h in 50.0f64..120.0,
            rot in any::<bool>(),
        ) {
            let total: f64 = items.iter().map(|(l, _)| l).sum();
            if let Some(r) = relax_and_pack(&items, h, total * 0.5, rot, 30) {
                prop_assert!(satisfies_disjunctions(&items, &r.placements, (r.bin_length, h)));
            }
        }
    }
}
