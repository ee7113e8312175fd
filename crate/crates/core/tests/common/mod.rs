#![allow(dead_code)]

use rand::prelude::*;

use opus_core::geometry::{Point, Polygon};

/// Star-shaped polygon around the origin: sorted angles, random radii.
/// Always simple, frequently non-convex.
pub fn star_polygon(rng: &mut impl Rng, max_vertices: usize, r_min: f64, r_max: f64) -> Polygon {
    let n = rng.gen_range(3..=max_vertices);
    loop {
        let mut angles: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let min_gap = angles
            .windows(2)
            .map(|w| w[1] - w[0])
            .chain([angles[0] + std::f64::consts::TAU - angles[n - 1]])
            .fold(f64::INFINITY, f64::min);
        if min_gap < 0.05 {
            continue;
        }
        let pts: Vec<Point> = angles
            .iter()
            .map(|&a| {
                let r = rng.gen_range(r_min..r_max);
                Point::new(r * a.cos(), r * a.sin())
            })
            .collect();
        if let Ok(p) = Polygon::new(pts) {
            if p.area() > 1e-3 * r_max * r_max {
                return p;
            }
        }
    }
}

pub fn random_symmetric(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = rng.gen();
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

pub fn bundled(name: &str) -> opus_core::interface::Instance {
    let text = opus_core::interface::bundled_instance(name).expect("bundled instance");
    opus_core::interface::parse_instance(text.as_bytes()).expect("bundled instance parses")
}
