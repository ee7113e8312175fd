//! Polygon primitives: area, centroid, rigid transforms, convex hulls,
//! overlap and containment predicates.
//!
//! Polygons are simple (non self-intersecting), hole-free and stored in
//! counter-clockwise winding. Every rigid motion in this crate rotates a
//! polygon about its area centroid, which acts as the piece reference point.

mod clip;
mod hull;
mod polygon;

pub use clip::{intersection_area, overlap};
pub use hull::{convex_hull, hull_area};
pub use polygon::Polygon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("vertices {0} and {1} coincide")]
    RepeatedVertex(usize, usize),
    #[error("polygon is degenerate (zero area)")]
    Degenerate,
    #[error("polygon boundary self-intersects (edges {0} and {1})")]
    SelfIntersecting(usize, usize),
    #[error("convex hull is degenerate: all points are collinear")]
    DegenerateHull,
    #[error("bounding box of an empty polygon list")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Placement of a piece: its centroid lands on `(x, y)` after a rotation of
/// `angle` degrees about the centroid.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub angle: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, angle: f64) -> Self {
        Self {
            x,
            y,
            angle: normalize_deg(angle),
        }
    }
}

/// Axis-aligned rectangle given by its bottom-left corner and extents.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub length: f64,
    pub height: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, length: f64, height: f64) -> Self {
        debug_assert!(length >= 0.0 && height >= 0.0);
        Self {
            x,
            y,
            length,
            height,
        }
    }

    pub fn right(&self) -> f64 {
        self.x + self.length
    }

    pub fn top(&self) -> f64 {
        self.y + self.height
    }

    pub fn area(&self) -> f64 {
        self.length * self.height
    }

    /// True when the interiors of both rectangles intersect.
    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.right() && other.x < self.right() && self.y < other.top() && other.y < self.top()
    }

    pub fn union(&self, other: &Rect) -> Rect {
        let x = self.x.min(other.x);
        let y = self.y.min(other.y);
        Rect::new(x, y, self.right().max(other.right()) - x, self.top().max(other.top()) - y)
    }
}

/// Maps an angle in degrees into `[0, 360)`.
pub fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90.
pub fn sin_cos_deg(a: f64) -> (f64, f64) {
    let a = normalize_deg(a);
    if a == 0.0 {
        (0.0, 1.0)
    } else if a == 90.0 {
        (1.0, 0.0)
    } else if a == 180.0 {
        (0.0, -1.0)
    } else if a == 270.0 {
        (-1.0, 0.0)
    } else {
        a.to_radians().sin_cos()
    }
}

pub fn area(p: &Polygon) -> f64 {
    p.area()
}

pub fn centroid(p: &Polygon) -> Point {
    p.centroid()
}

/// Rotates `p` by `pose.angle` about its centroid, then moves the centroid to
/// `(pose.x, pose.y)`.
pub fn transform(p: &Polygon, pose: Pose) -> Polygon {
    p.posed(pose)
}

/// True iff every vertex of `p` lies in `container` inflated by `eps`.
pub fn contains(container: &Rect, p: &Polygon, eps: f64) -> bool {
    let (x0, y0) = (container.x - eps, container.y - eps);
    let (x1, y1) = (container.right() + eps, container.top() + eps);
    p.vertices()
        .iter()
        .all(|v| v.x >= x0 && v.x <= x1 && v.y >= y0 && v.y <= y1)
}

/// Smallest axis-aligned rectangle containing every polygon.
pub fn bounding_box(ps: &[Polygon]) -> Result<Rect, GeometryError> {
    let mut it = ps.iter();
    let first = it.next().ok_or(GeometryError::EmptyInput)?.bbox();
    Ok(it.fold(first, |acc, p| acc.union(&p.bbox())))
}

pub(crate) fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}
