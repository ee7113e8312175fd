//! Intersection area of two simple polygons, computed as the sum of
//! pairwise convex intersections of their triangulations.

use super::{cross, Point, Polygon, Rect};

fn tri_bbox(a: Point, b: Point, c: Point) -> Rect {
    let x0 = a.x.min(b.x).min(c.x);
    let y0 = a.y.min(b.y).min(c.y);
    Rect::new(x0, y0, a.x.max(b.x).max(c.x) - x0, a.y.max(b.y).max(c.y) - y0)
}

/// Area of the intersection of two counter-clockwise triangles
/// (Sutherland–Hodgman clipping of `subject` by the half-planes of `clip`).
fn triangle_overlap(subject: [Point; 3], clip: [Point; 3]) -> f64 {
    let mut poly: Vec<Point> = subject.to_vec();
    let mut next: Vec<Point> = Vec::with_capacity(9);
    for e in 0..3 {
        let (a, b) = (clip[e], clip[(e + 1) % 3]);
        next.clear();
        let m = poly.len();
        for i in 0..m {
            let p = poly[i];
            let q = poly[(i + 1) % m];
            let dp = cross(a, b, p);
            let dq = cross(a, b, q);
            if dp >= 0.0 {
                next.push(p);
            }
            if (dp >= 0.0) != (dq >= 0.0) {
                let t = dp / (dp - dq);
                next.push(Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)));
            }
        }
        std::mem::swap(&mut poly, &mut next);
        if poly.len() < 3 {
            return 0.0;
        }
    }
    let m = poly.len();
    let mut s = 0.0;
    for i in 0..m {
        let (p, q) = (poly[i], poly[(i + 1) % m]);
        s += p.x * q.y - q.x * p.y;
    }
    (0.5 * s).max(0.0)
}

/// Accumulates intersection area, stopping early once it exceeds `stop`.
fn overlap_area(a: &Polygon, b: &Polygon, stop: f64) -> f64 {
    let (ba, bb) = (a.bbox(), b.bbox());
    if !ba.intersects(&bb) {
        return 0.0;
    }
    let va = a.vertices();
    let vb = b.vertices();
    let tb: Vec<([Point; 3], Rect)> = b
        .triangles()
        .iter()
        .map(|t| {
            let tri = [vb[t[0]], vb[t[1]], vb[t[2]]];
            (tri, tri_bbox(tri[0], tri[1], tri[2]))
        })
        .filter(|(_, r)| r.intersects(&ba))
        .collect();
    let mut acc = 0.0;
    for t in a.triangles() {
        let ta = [va[t[0]], va[t[1]], va[t[2]]];
        let ra = tri_bbox(ta[0], ta[1], ta[2]);
        if !ra.intersects(&bb) {
            continue;
        }
        for (tri, rb) in &tb {
            if ra.intersects(rb) {
                acc += triangle_overlap(ta, *tri);
                if acc > stop {
                    return acc;
                }
            }
        }
    }
    acc
}

/// Area of `a ∩ b`.
pub fn intersection_area(a: &Polygon, b: &Polygon) -> f64 {
    overlap_area(a, b, f64::INFINITY)
}

/// True iff the interiors of `a` and `b` intersect with area above `eps`.
/// Touching boundaries do not count.
pub fn overlap(a: &Polygon, b: &Polygon, eps: f64) -> bool {
    overlap_area(a, b, eps) > eps
}
