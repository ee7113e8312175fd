//! Pairwise geometric compatibility.
//!
//! For an ordered pair of pieces (fixed, moving) the no-fit table records, for
//! every polar angle θ of the moving centroid around the fixed centroid, the
//! smallest overlap-free radius and the orientation φ whose joint convex hull
//! is smallest. The best entry over θ gives the pair's wasted area (the
//! distance) and its incompatibility ratio.

mod cache;

pub use cache::NffCache;

use std::collections::HashMap;
use std::sync::Arc;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{hull_area, normalize_deg, overlap, sin_cos_deg, Point, Polygon, Pose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompatError {
    #[error("invalid discretization: {0}")]
    InvalidConfig(String),
    #[error("no overlap-free radius up to r_max={r_max} at theta={theta} for any orientation")]
    RadiusTooSmall { theta: f64, r_max: f64 },
}

/// Angles in degrees; radii scanned as `0, Δr, 2Δr, …` up to `r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationConfig {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub r_step: f64,
    /// Search ceiling; `None` uses the sum of both circumradii plus `2Δr`.
    pub r_max: Option<f64>,
}

fn angle_grid(step: f64) -> Vec<f64> {
    let n = (360.0 / step).round() as usize;
    (0..n).map(|k| k as f64 * step).filter(|a| *a < 360.0).collect()
}

impl DiscretizationConfig {
    /// Evenly spaced angle sets starting at 0.
    pub fn uniform(theta_step: f64, phi_step: f64, r_step: f64) -> Result<Self, CompatError> {
        if !(theta_step > 0.0 && theta_step <= 360.0 && phi_step > 0.0 && phi_step <= 360.0) {
            return Err(CompatError::InvalidConfig("angle steps must lie in (0, 360]".into()));
        }
        let cfg = Self {
            theta: angle_grid(theta_step),
            phi: angle_grid(phi_step),
            r_step,
            r_max: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CompatError> {
        for (name, set) in [("theta", &self.theta), ("phi", &self.phi)] {
            if set.is_empty() {
                return Err(CompatError::InvalidConfig(format!("{name} set is empty")));
            }
            if set.iter().any(|a| !(0.0..360.0).contains(a)) {
                return Err(CompatError::InvalidConfig(format!("{name} values must lie in [0, 360)")));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CompatError::InvalidConfig(format!("{name} values must be strictly increasing")));
            }
            if set[0] != 0.0 {
                return Err(CompatError::InvalidConfig(format!("{name} set must contain 0")));
            }
        }
        if !(self.r_step > 0.0 && self.r_step.is_finite()) {
            return Err(CompatError::InvalidConfig("r_step must be positive".into()));
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0) {
                return Err(CompatError::InvalidConfig("r_max must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn r_max_for(&self, fixed: &Polygon, moving: &Polygon) -> f64 {
        self.r_max
            .unwrap_or_else(|| fixed.circumradius() + moving.circumradius() + 2.0 * self.r_step)
    }

    fn theta_index(&self, a: f64) -> Option<usize> {
        find_angle(&self.theta, a)
    }

    fn phi_index(&self, a: f64) -> Option<usize> {
        find_angle(&self.phi, a)
    }
}

fn find_angle(set: &[f64], a: f64) -> Option<usize> {
    let a = normalize_deg(a);
    set.iter().position(|&s| {
        let d = (s - a).abs();
        d < 1e-9 || (360.0 - d) < 1e-9
    })
}

/// Overlap tolerance used throughout a solve: a millionth of the smallest
/// piece area.
pub fn default_overlap_eps(pieces: &[Polygon]) -> f64 {
    1e-6 * pieces.iter().map(Polygon::area).fold(f64::INFINITY, f64::min)
}

/// Best overlap-free radius and resulting hull area for one `(θ, φ)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NffCell {
    pub r: f64,
    pub hull_area: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NffEntry {
    pub theta: f64,
    pub r: f64,
    pub phi: f64,
    pub hull_area: f64,
}

/// No-fit function of an ordered pair of shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoFitTable {
    /// Shape-class ids (fixed, moving).
    pub pair: (usize, usize),
    /// One argmin entry per θ, in θ order.
    pub entries: Vec<NffEntry>,
    /// Every `(θ, φ)` cell, `None` when no radius up to `r_max` clears.
    pub grid: Vec<Vec<Option<NffCell>>>,
    /// θ values whose cells could not be mirrored and were computed directly.
    #[serde(default)]
    pub fallback_thetas: Vec<f64>,
}

impl NoFitTable {
    pub fn entry(&self, theta_idx: usize) -> &NffEntry {
        &self.entries[theta_idx]
    }
}

/// Moving piece rotated by `phi`, its centroid at `r` along direction `theta`
/// from the centroid of `fixed`.
pub fn polar_place(fixed: &Polygon, moving: &Polygon, r: f64, theta: f64, phi: f64) -> Polygon {
    let (s, c) = sin_cos_deg(theta);
    let o = fixed.centroid();
    moving.posed(Pose::new(o.x + r * c, o.y + r * s, phi))
}

fn scan_cell(fixed: &Polygon, moving: &Polygon, theta: f64, phi: f64, cfg: &DiscretizationConfig, r_max: f64, eps: f64) -> Option<NffCell> {
    let mut k = 0u32;
    loop {
        let r = k as f64 * cfg.r_step;
        if r > r_max + 1e-9 {
            return None;
        }
        let placed = polar_place(fixed, moving, r, theta, phi);
        if !overlap(fixed, &placed, eps) {
            let mut pts: Vec<Point> = fixed.vertices().to_vec();
            pts.extend_from_slice(placed.vertices());
            return Some(NffCell {
                r,
                hull_area: hull_area(&pts),
            });
        }
        k += 1;
    }
}

fn row_argmin(theta: f64, row: &[Option<NffCell>], cfg: &DiscretizationConfig, r_max: f64) -> Result<NffEntry, CompatError> {
    let mut best: Option<NffEntry> = None;
    for (pi, cell) in row.iter().enumerate() {
        if let Some(c) = cell {
            if best.is_none_or(|b| improves(c.hull_area, b.hull_area)) {
                best = Some(NffEntry {
                    theta,
                    r: c.r,
                    phi: cfg.phi[pi],
                    hull_area: c.hull_area,
                });
            }
        }
    }
    best.ok_or(CompatError::RadiusTooSmall { theta, r_max })
}

/// Strict improvement beyond floating-point noise, so near-ties keep the
/// earlier candidate.
fn improves(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - 1e-12 * incumbent.abs()
}

/// Direct evaluation of the no-fit function for every θ ∈ Θ.
pub fn compute_nff(fixed: &Polygon, moving: &Polygon, cfg: &DiscretizationConfig, eps: f64) -> Result<NoFitTable, CompatError> {
    compute_nff_for(fixed, moving, (0, 0), cfg, eps)
}

fn compute_nff_for(fixed: &Polygon, moving: &Polygon, pair: (usize, usize), cfg: &DiscretizationConfig, eps: f64) -> Result<NoFitTable, CompatError> {
    cfg.validate()?;
    let r_max = cfg.r_max_for(fixed, moving);
    let mut grid = Vec::with_capacity(cfg.theta.len());
    let mut entries = Vec::with_capacity(cfg.theta.len());
    for &theta in &cfg.theta {
        let row: Vec<Option<NffCell>> = cfg
            .phi
            .iter()
            .map(|&phi| scan_cell(fixed, moving, theta, phi, cfg, r_max, eps))
            .collect();
        entries.push(row_argmin(theta, &row, cfg, r_max)?);
        grid.push(row);
    }
    Ok(NoFitTable {
        pair,
        entries,
        grid,
        fallback_thetas: Vec::new(),
    })
}

/// Table of the reversed pair derived from `t` through the rigid-motion
/// identity `NFF_ji(θ) = (r, φ)` where `NFF_ij(θ + 180 − φ) = (r, −φ)`,
/// applied cell by cell. Cells whose mapped angles fall outside Θ or Φ are
/// computed directly; their θ values are listed in `fallback_thetas`.
///
/// `fixed` and `moving` are the shapes of `t` (not of the result).
pub fn mirror_nff(t: &NoFitTable, fixed: &Polygon, moving: &Polygon, cfg: &DiscretizationConfig, eps: f64) -> Result<NoFitTable, CompatError> {
    cfg.validate()?;
    let r_max = cfg.r_max_for(moving, fixed);
    let mut grid = Vec::with_capacity(cfg.theta.len());
    let mut entries = Vec::with_capacity(cfg.theta.len());
    let mut fallback = Vec::new();
    for &theta in &cfg.theta {
        let mut direct = false;
        let row: Vec<Option<NffCell>> = cfg
            .phi
            .iter()
            .map(|&phi| {
                match (cfg.theta_index(theta + 180.0 - phi), cfg.phi_index(-phi)) {
                    (Some(ti), Some(pi)) => t.grid[ti][pi],
                    _ => {
                        direct = true;
                        scan_cell(moving, fixed, theta, phi, cfg, r_max, eps)
                    }
                }
            })
            .collect();
        if direct {
            debug!("mirror fallback at theta={theta} for pair {:?}", t.pair);
            fallback.push(theta);
        }
        entries.push(row_argmin(theta, &row, cfg, r_max)?);
        grid.push(row);
    }
    Ok(NoFitTable {
        pair: (t.pair.1, t.pair.0),
        entries,
        grid,
        fallback_thetas: fallback,
    })
}

/// Optimal pairwise placement over Θ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairPlacement {
    pub theta_star: f64,
    pub r_star: f64,
    pub phi_star: f64,
    pub hull_area_star: f64,
    pub distance: f64,
}

pub fn pair_distance(fixed: &Polygon, moving: &Polygon, table: &NoFitTable) -> PairPlacement {
    let best = table
        .entries
        .iter()
        .fold(None::<&NffEntry>, |acc, e| match acc {
            Some(b) if !improves(e.hull_area, b.hull_area) => Some(b),
            _ => Some(e),
        })
        .expect("no-fit table has at least one entry");
    PairPlacement {
        theta_star: best.theta,
        r_star: best.r,
        phi_star: best.phi,
        hull_area_star: best.hull_area,
        distance: (best.hull_area - fixed.area() - moving.area()).max(0.0),
    }
}

/// Wasted fraction of the optimal hull, clamped to `[0, 1]`.
pub fn incompatibility(p: &PairPlacement) -> f64 {
    if p.hull_area_star <= 0.0 {
        return 0.0;
    }
    (p.distance / p.hull_area_star).clamp(0.0, 1.0)
}

/// Groups congruent pieces (same vertex cycle after centering, up to 1e-9).
/// Returns the class id of every piece and one representative per class.
pub fn shape_classes(pieces: &[Polygon]) -> (Vec<usize>, Vec<usize>) {
    let centered: Vec<Polygon> = pieces.iter().map(Polygon::centered).collect();
    let mut reps: Vec<usize> = Vec::new();
    let mut class = Vec::with_capacity(pieces.len());
    for (i, p) in centered.iter().enumerate() {
        match reps.iter().position(|&r| congruent_by_translation(&centered[r], p)) {
            Some(c) => class.push(c),
            None => {
                class.push(reps.len());
                reps.push(i);
            }
        }
    }
    (class, reps)
}

fn congruent_by_translation(a: &Polygon, b: &Polygon) -> bool {
    let (va, vb) = (a.vertices(), b.vertices());
    if va.len() != vb.len() {
        return false;
    }
    let n = va.len();
    (0..n).any(|shift| (0..n).all(|k| va[k].dist(vb[(k + shift) % n]) <= 1e-9))
}

/// No-fit tables for every ordered pair of shape classes.
#[derive(Debug, Clone)]
pub struct NffTables {
    pub classes: Vec<usize>,
    tables: HashMap<(usize, usize), Arc<NoFitTable>>,
}

impl NffTables {
    /// Table for placing piece `moving` around piece `fixed` (piece indices).
    pub fn get(&self, fixed: usize, moving: usize) -> &NoFitTable {
        &self.tables[&(self.classes[fixed], self.classes[moving])]
    }

    pub fn distinct_tables(&self) -> usize {
        self.tables.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrices {
    pub d: Vec<Vec<f64>>,
    pub gi: Vec<Vec<f64>>,
}

impl DistanceMatrices {
    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    /// Sub-matrix of `D` restricted to `idx`.
    pub fn sub_distance(&self, idx: &[usize]) -> Vec<Vec<f64>> {
        idx.iter()
            .map(|&i| idx.iter().map(|&j| self.d[i][j]).collect())
            .collect()
    }
}

pub fn distance_matrices(pieces: &[Polygon], cfg: &DiscretizationConfig) -> Result<(DistanceMatrices, NffTables), CompatError> {
    distance_matrices_cached(pieces, cfg, None)
}

/// Computes one table per unordered pair of shape classes (the reverse
/// direction is mirrored), then fills `D` and `GI` from the ordered pair
/// `(min(i, j), max(i, j))`.
pub fn distance_matrices_cached(pieces: &[Polygon], cfg: &DiscretizationConfig, cache: Option<&NffCache>) -> Result<(DistanceMatrices, NffTables), CompatError> {
    cfg.validate()?;
    let n = pieces.len();
    let eps = default_overlap_eps(pieces);
    let (classes, reps) = shape_classes(pieces);
    let shapes: Vec<Polygon> = reps.iter().map(|&r| pieces[r].centered()).collect();
    let k = shapes.len();

    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    let direct: Vec<((usize, usize), NoFitTable)> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let cached = cache.and_then(|c| c.load(&shapes[a], &shapes[b], cfg, eps));
            let mut t = match cached {
                Some(t) => t,
                None => {
                    let t = compute_nff(&shapes[a], &shapes[b], cfg, eps)?;
                    if let Some(c) = cache {
                        c.store(&shapes[a], &shapes[b], cfg, eps, &t);
                    }
                    t
                }
            };
            t.pair = (a, b);
            Ok(((a, b), t))
        })
        .collect::<Result<_, CompatError>>()?;

    let mut tables: HashMap<(usize, usize), Arc<NoFitTable>> = HashMap::new();
    for ((a, b), t) in direct {
        if a != b {
            let m = mirror_nff(&t, &shapes[a], &shapes[b], cfg, eps)?;
            tables.insert((b, a), Arc::new(m));
        }
        tables.insert((a, b), Arc::new(t));
    }

    let mut d = vec![vec![0.0; n]; n];
    let mut gi = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let t = &tables[&(classes[i], classes[j])];
            let p = pair_distance(&pieces[i], &pieces[j], t);
            let g = incompatibility(&p);
            d[i][j] = p.distance;
            d[j][i] = p.distance;
            gi[i][j] = g;
            gi[j][i] = g;
        }
    }
    debug!("{} pieces, {} shape classes, {} tables", n, k, tables.len());
    Ok((DistanceMatrices { d, gi }, NffTables { classes, tables }))
}
