use super::{cross, GeometryError, Point, Polygon};

/// Andrew's monotone chain; collinear boundary points are dropped.
fn hull_points(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

pub fn convex_hull(points: &[Point]) -> Result<Polygon, GeometryError> {
    let h = hull_points(points);
    if h.len() < 3 {
        return Err(GeometryError::DegenerateHull);
    }
    Polygon::new(h).map_err(|_| GeometryError::DegenerateHull)
}

/// Area of the convex hull of `points` (0 for degenerate input).
pub fn hull_area(points: &[Point]) -> f64 {
    let h = hull_points(points);
    if h.len() < 3 {
        return 0.0;
    }
    let n = h.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (h[i], h[(i + 1) % n]);
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}
