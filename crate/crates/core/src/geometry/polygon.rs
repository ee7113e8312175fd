use serde::{Deserialize, Serialize};

use super::{cross, sin_cos_deg, GeometryError, Point, Pose, Rect};

/// Simple polygon in counter-clockwise winding.
///
/// A triangulation is computed once at construction; rigid motions keep the
/// triangle indices valid, so posed copies never re-triangulate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct Polygon {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    area: f64,
    centroid: Point,
}

impl TryFrom<Vec<Point>> for Polygon {
    type Error = GeometryError;

    fn try_from(v: Vec<Point>) -> Result<Self, Self::Error> {
        Polygon::new(v)
    }
}

impl From<Polygon> for Vec<Point> {
    fn from(p: Polygon) -> Self {
        p.vertices
    }
}

impl Polygon {
    /// Validates and normalizes a vertex list. A repeated closing vertex is
    /// dropped; clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point>) -> Result<Self, GeometryError> {
        if vertices.len() > 3 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let n = vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(n));
        }
        if let Some(i) = vertices.iter().position(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(GeometryError::NonFinite(i));
        }
        for i in 0..n {
            let j = (i + 1) % n;
            if vertices[i] == vertices[j] {
                return Err(GeometryError::RepeatedVertex(i, j));
            }
        }
        let signed = signed_area(&vertices);
        let scale = vertices
            .iter()
            .map(|v| v.x.abs().max(v.y.abs()))
            .fold(1.0_f64, f64::max);
        if signed.abs() <= 1e-12 * scale * scale {
            return Err(GeometryError::Degenerate);
        }
        if signed < 0.0 {
            vertices.reverse();
        }
        check_simple(&vertices)?;
        let triangles = triangulate(&vertices);
        let centroid = area_centroid(&vertices);
        Ok(Self {
            area: signed.abs(),
            centroid,
            vertices,
            triangles,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn centroid(&self) -> Point {
        self.centroid
    }

    pub(crate) fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn bbox(&self) -> Rect {
        let mut x0 = f64::INFINITY;
        let mut y0 = f64::INFINITY;
        let mut x1 = f64::NEG_INFINITY;
        let mut y1 = f64::NEG_INFINITY;
        for v in &self.vertices {
            x0 = x0.min(v.x);
            y0 = y0.min(v.y);
            x1 = x1.max(v.x);
            y1 = y1.max(v.y);
        }
        Rect::new(x0, y0, x1 - x0, y1 - y0)
    }

    /// Largest distance from the centroid to a vertex.
    pub fn circumradius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.dist(self.centroid))
            .fold(0.0, f64::max)
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].dist(self.vertices[(i + 1) % n]))
            .sum()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Polygon {
        Polygon {
            vertices: self
                .vertices
                .iter()
                .map(|v| Point::new(v.x + dx, v.y + dy))
                .collect(),
            triangles: self.triangles.clone(),
            area: self.area,
            centroid: Point::new(self.centroid.x + dx, self.centroid.y + dy),
        }
    }

    /// Rotation by `pose.angle` about the centroid, then the centroid is moved
    /// onto `(pose.x, pose.y)`.
    pub fn posed(&self, pose: Pose) -> Polygon {
        let (s, c) = sin_cos_deg(pose.angle);
        let o = self.centroid;
        let vertices = self
            .vertices
            .iter()
            .map(|v| {
                let (dx, dy) = (v.x - o.x, v.y - o.y);
                Point::new(pose.x + c * dx - s * dy, pose.y + s * dx + c * dy)
            })
            .collect();
        Polygon {
            vertices,
            triangles: self.triangles.clone(),
            area: self.area,
            centroid: Point::new(pose.x, pose.y),
        }
    }

    /// Copy translated so that its centroid sits at the origin.
    pub fn centered(&self) -> Polygon {
        self.translated(-self.centroid.x, -self.centroid.y)
    }
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

fn area_centroid(v: &[Point]) -> Point {
    // shift to the first vertex to limit cancellation on far-off coordinates
    let o = v[0];
    let n = v.len();
    let (mut a2, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        let (px, py, qx, qy) = (p.x - o.x, p.y - o.y, q.x - o.x, q.y - o.y);
        let w = px * qy - qx * py;
        a2 += w;
        cx += (px + qx) * w;
        cy += (py + qy) * w;
    }
    Point::new(o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2))
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |a: Point, b: Point, p: Point| {
        p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
    };
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

fn check_simple(v: &[Point]) -> Result<(), GeometryError> {
    let n = v.len();
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        // folded-back spike on consecutive edges
        let c = v[(i + 2) % n];
        if cross(a, b, c) == 0.0 && (b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y) < 0.0 {
            return Err(GeometryError::SelfIntersecting(i, (i + 1) % n));
        }
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_intersect(a, b, v[j], v[(j + 1) % n]) {
                return Err(GeometryError::SelfIntersecting(i, j));
            }
        }
    }
    Ok(())
}

fn in_triangle(p: Point, a: Point, b: Point, c: Point) -> bool {
    cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
}

/// Ear clipping on a counter-clockwise simple polygon.
fn triangulate(v: &[Point]) -> Vec<[usize; 3]> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    let mut out = Vec::with_capacity(v.len().saturating_sub(2));
    while idx.len() > 3 {
        let m = idx.len();
        let mut ear = None;
        for k in 0..m {
            let (i0, i1, i2) = (idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]);
            let (a, b, c) = (v[i0], v[i1], v[i2]);
            let turn = cross(a, b, c);
            if turn == 0.0 {
                // collinear vertex: drop it without emitting a triangle
                ear = Some((k, false));
                break;
            }
            if turn < 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                j != i0 && j != i1 && j != i2 && v[j] != a && v[j] != b && v[j] != c && in_triangle(v[j], a, b, c)
            });
            if !blocked {
                ear = Some((k, true));
                break;
            }
        }
        // numerical dead end: clip the most convex vertex
        let (k, emit) = ear.unwrap_or_else(|| {
            let k = (0..m)
                .max_by(|&x, &y| {
                    let t = |k: usize| cross(v[idx[(k + m - 1) % m]], v[idx[k]], v[idx[(k + 1) % m]]);
                    t(x).total_cmp(&t(y))
                })
                .unwrap();
            (k, true)
        });
        if emit {
            out.push([idx[(k + m - 1) % m], idx[k], idx[(k + 1) % m]]);
        }
        idx.remove(k);
    }
    if cross(v[idx[0]], v[idx[1]], v[idx[2]]) > 0.0 {
        out.push([idx[0], idx[1], idx[2]]);
    }
    out
}
