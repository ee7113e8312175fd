//! End-to-end solver: compatibility tables, candidate partitions, cluster
//! ordering and packing, rectangle placement, and refinement. Also hosts the
//! QAOA tuning experiment.

use std::collections::HashMap;
use std::time::Instant;

use log::{debug, info};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{enumerate_partitions, filter_partitions, partition_penalty, MergePolicy, Partition};
use crate::compat::{default_overlap_eps, distance_matrices_cached, CompatError, DiscretizationConfig, NffCache, NffTables};
use crate::geometry::{Polygon, Pose, Rect};
use crate::packing::{
    global_optimize, layout_metrics, local_optimize, pack_cluster_best, place_cluster, relax_and_pack, tighten_packing, validate_layout, ClusterPacking,
    Layout, PackingError, Violation,
};
use crate::qaoa::{run_qaoa, Optimizer, QaoaConfig, QaoaError, QUBIT_CAP};
use crate::tsp::{brute_force, optimality, path_extremes, path_length, TspError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TspBackend {
    #[default]
    Brute,
    Qaoa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub discretization: DiscretizationConfig,
    /// Largest cluster size swept by the partition enumeration.
    pub n_max: usize,
    pub n_partitions: usize,
    pub tsp_backend: TspBackend,
    pub qaoa: QaoaConfig,
    /// Smallest cluster handed to the QAOA backend; smaller ones use brute force.
    pub qaoa_min_size: usize,
    pub grid_divisions: usize,
    pub seed: u64,
    /// Number of ×1.05 bin enlargements tried per partition.
    pub relaxation_cap: usize,
    pub merge_policy: MergePolicy,
    pub max_relocations: usize,
    pub workers: usize,
    /// Overlap tolerance; defaults to a millionth of the smallest piece area.
    pub overlap_eps: Option<f64>,
}

impl SolverConfig {
    /// Defaults for a given orientation step and radial step; Θ uses 5°.
    pub fn new(rotation_step: f64, delta_r: f64) -> Result<Self, CompatError> {
        Ok(Self {
            discretization: DiscretizationConfig::uniform(5.0, rotation_step, delta_r)?,
            n_max: 4,
            n_partitions: 20,
            tsp_backend: TspBackend::Brute,
            qaoa: QaoaConfig::default(),
            qaoa_min_size: 3,
            grid_divisions: 100,
            seed: 0,
            relaxation_cap: 200,
            merge_policy: MergePolicy::Skip,
            max_relocations: 500,
            workers: 1,
            overlap_eps: None,
        })
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(m.to_string()));
        self.discretization.validate()?;
        if self.n_max == 0 {
            return bad("n_max must be at least 1");
        }
        if self.n_partitions == 0 {
            return bad("n_partitions must be at least 1");
        }
        if self.grid_divisions == 0 {
            return bad("grid_divisions must be at least 1");
        }
        if self.workers == 0 {
            return bad("workers must be at least 1");
        }
        if self.tsp_backend == TspBackend::Qaoa {
            self.qaoa.validate()?;
            if self.n_max * self.n_max > QUBIT_CAP {
                return Err(SolveError::InvalidConfig(format!(
                    "the QAOA backend needs n_max^2 <= {QUBIT_CAP} qubits, got n_max = {}",
                    self.n_max
                )));
            }
        }
        Ok(())
    }

    fn allows_quarter_turn(&self) -> bool {
        self.discretization.phi.iter().any(|&a| (a - 90.0).abs() < 1e-9)
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("piece {piece} needs a height of at least {min_height} in every allowed orientation, container height is {height}")]
    PieceTooTall { piece: usize, min_height: f64, height: f64 },
    #[error("no partition could be packed within height {height}")]
    NoFeasiblePartition { height: f64 },
    #[error("produced layout is invalid: {0:?}")]
    InvalidLayout(Vec<Violation>),
    #[error(transparent)]
    Compat(#[from] CompatError),
    #[error(transparent)]
    Packing(#[from] PackingError),
    #[error(transparent)]
    Tsp(#[from] TspError),
    #[error(transparent)]
    Qaoa(#[from] QaoaError),
}

impl SolveError {
    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            SolveError::InvalidConfig(_) => "config",
            SolveError::PieceTooTall { .. } | SolveError::NoFeasiblePartition { .. } => "infeasible",
            SolveError::InvalidLayout(_) => "internal",
            SolveError::Compat(_) => "discretization",
            SolveError::Packing(_) => "packing",
            SolveError::Tsp(_) | SolveError::Qaoa(_) => "tsp",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub compatibility_s: f64,
    pub clustering_s: f64,
    pub cluster_packing_s: f64,
    pub placement_s: f64,
    pub global_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub pieces: usize,
    pub height: f64,
    pub length: f64,
    pub waste_area: f64,
    pub waste_ratio: f64,
    pub times: StageTimes,
    pub distinct_nff_tables: usize,
    pub partitions_generated: usize,
    pub partitions_kept: usize,
    pub distinct_clusters: usize,
    pub tsp_calls: usize,
    pub tsp_backend: TspBackend,
    /// Best length after each kept partition, in evaluation order.
    pub length_trace: Vec<f64>,
    /// Length before the final global optimization.
    pub length_before_global: f64,
    pub seed: u64,
    pub config: SolverConfig,
}

fn mix_seed(seed: u64, cluster: &[usize]) -> u64 {
    cluster.iter().fold(seed ^ 0x9e37_79b9_7f4a_7c15, |h, &i| {
        (h ^ i as u64).wrapping_mul(0x0100_0000_01b3).rotate_left(17)
    })
}

struct ClusterJob<'a> {
    pieces: &'a [Polygon],
    d: &'a [Vec<f64>],
    tables: &'a NffTables,
    cfg: &'a SolverConfig,
    eps: f64,
}

impl ClusterJob<'_> {
    /// Visit order (piece indices) and packing of one cluster; the flag
    /// reports whether a TSP solver ran.
    fn pack(&self, cluster: &[usize]) -> Result<(ClusterPacking, bool), SolveError> {
        let (order, solved) = if cluster.len() <= 2 {
            (cluster.to_vec(), false)
        } else {
            let sub: Vec<Vec<f64>> = cluster.iter().map(|&i| cluster.iter().map(|&j| self.d[i][j]).collect()).collect();
            let use_qaoa = self.cfg.tsp_backend == TspBackend::Qaoa && cluster.len() >= self.cfg.qaoa_min_size;
            let path = if use_qaoa {
                let q = QaoaConfig { seed: mix_seed(self.cfg.seed, cluster), ..self.cfg.qaoa.clone() };
                run_qaoa(&sub, &q)?.path
            } else {
                brute_force(&sub)?
            };
            (path.sigma.iter().map(|&k| cluster[k]).collect(), true)
        };
        let cp = pack_cluster_best(self.pieces, &order, self.tables, &self.cfg.discretization, self.eps)?;
        Ok((cp, solved))
    }
}

fn check_heights(pieces: &[Polygon], height: f64, phi: &[f64]) -> Result<(), SolveError> {
    for (i, p) in pieces.iter().enumerate() {
        let min_height = phi
            .iter()
            .map(|&a| p.posed(Pose::new(0.0, 0.0, a)).bbox().height)
            .fold(f64::INFINITY, f64::min);
        if min_height > height * (1.0 + 1e-12) {
            return Err(SolveError::PieceTooTall { piece: i, min_height, height });
        }
    }
    Ok(())
}

/// Runs the whole heuristic and returns the best layout found.
pub fn solve(pieces: &[Polygon], height: f64, cfg: &SolverConfig, cache: Option<&NffCache>) -> Result<(Layout, SolveReport), SolveError> {
    cfg.validate()?;
    if pieces.is_empty() {
        return Err(SolveError::InvalidConfig("instance has no pieces".into()));
    }
    if !(height > 0.0 && height.is_finite()) {
        return Err(SolveError::InvalidConfig(format!("height must be positive, got {height}")));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
    pool.install(|| solve_inner(pieces, height, cfg, cache))
}

fn solve_inner(pieces: &[Polygon], height: f64, cfg: &SolverConfig, cache: Option<&NffCache>) -> Result<(Layout, SolveReport), SolveError> {
    let start = Instant::now();
    let mut times = StageTimes::default();
    let disc = &cfg.discretization;
    check_heights(pieces, height, &disc.phi)?;
    let eps = cfg.overlap_eps.unwrap_or_else(|| default_overlap_eps(pieces));

    let t = Instant::now();
    let (matrices, tables) = distance_matrices_cached(pieces, disc, cache)?;
    times.compatibility_s = t.elapsed().as_secs_f64();
    info!("compatibility: {} tables in {:.2}s", tables.distinct_tables(), times.compatibility_s);

    let t = Instant::now();
    let n = pieces.len();
    let sizes: Vec<usize> = (1..=cfg.n_max.min(n)).collect();
    let partitions = enumerate_partitions(&matrices.gi, &sizes, None, cfg.merge_policy);
    times.clustering_s = t.elapsed().as_secs_f64();
    info!("clustering: {} partitions", partitions.len());

    let t = Instant::now();
    let mut clusters: Vec<Vec<usize>> = partitions.iter().flat_map(|p| p.clusters.iter().cloned()).collect();
    clusters.sort();
    clusters.dedup();
    let job = ClusterJob { pieces, d: &matrices.d, tables: &tables, cfg, eps };
    let packed: Vec<(ClusterPacking, bool)> = clusters.par_iter().map(|c| job.pack(c)).collect::<Result<_, _>>()?;
    let tsp_calls = packed.iter().filter(|(_, s)| *s).count();
    let by_cluster: HashMap<&[usize], &ClusterPacking> = clusters.iter().map(Vec::as_slice).zip(packed.iter().map(|(cp, _)| cp)).collect();
    times.cluster_packing_s = t.elapsed().as_secs_f64();
    info!("cluster packing: {} clusters, {} TSP calls", clusters.len(), tsp_calls);

    let scored: Vec<(&Partition, f64)> = partitions
        .iter()
        .map(|p| {
            let boxes: Vec<Rect> = p.clusters.iter().map(|c| by_cluster[c.as_slice()].bbox).collect();
            (p, partition_penalty(&boxes))
        })
        .collect();
    let kept = filter_partitions(scored, cfg.n_partitions);

    let t = Instant::now();
    let allow_rotate = cfg.allows_quarter_turn();
    let mut best: Option<Layout> = None;
    let mut best_len = f64::INFINITY;
    let mut trace = Vec::with_capacity(kept.len());
    for (p, penalty) in &kept {
        let cps: Vec<&ClusterPacking> = p.clusters.iter().map(|c| by_cluster[c.as_slice()]).collect();
        let items: Vec<(f64, f64)> = cps.iter().map(|cp| (cp.bbox.length, cp.bbox.height)).collect();
        let Some(rp) = relax_and_pack(&items, height, best_len, allow_rotate, cfg.relaxation_cap) else {
            debug!("partition {:?} does not fit", p.clusters);
            trace.push(best_len);
            continue;
        };
        // the rectangle stage minimizes L: shrink the bin below the relaxed one
        let rp = tighten_packing(&items, height, rp, allow_rotate);
        if rp.used_height > height * (1.0 + 1e-12) {
            trace.push(best_len);
            continue;
        }
        let mut poses = vec![Pose::default(); n];
        for (cp, pl) in cps.iter().zip(&rp.placements) {
            for (i, pose) in place_cluster(cp, pl.x, pl.y, pl.rotated) {
                poses[i] = pose;
            }
        }
        let layout = Layout::from_poses(pieces, height, poses);
        let layout = local_optimize(pieces, &layout, disc.r_step, eps);
        debug!("partition {:?} (penalty {penalty:.1}): L = {:.3}", p.clusters, layout.length);
        if layout.length < best_len {
            best_len = layout.length;
            best = Some(layout);
        }
        trace.push(best_len);
    }
    times.placement_s = t.elapsed().as_secs_f64();
    let best = best.ok_or(SolveError::NoFeasiblePartition { height })?;

    let t = Instant::now();
    let length_before_global = best.length;
    let layout = global_optimize(pieces, &best, cfg.grid_divisions, &disc.phi, disc.r_step, eps, cfg.max_relocations);
    times.global_s = t.elapsed().as_secs_f64();
    times.total_s = start.elapsed().as_secs_f64();

    let violations = validate_layout(pieces, &layout, eps);
    if !violations.is_empty() {
        return Err(SolveError::InvalidLayout(violations));
    }
    let m = layout_metrics(pieces, &layout);
    info!("L = {:.3}, waste = {:.2}%", m.length, 100.0 * m.waste_ratio);
    let report = SolveReport {
        pieces: n,
        height,
        length: m.length,
        waste_area: m.waste_area,
        waste_ratio: m.waste_ratio,
        times,
        distinct_nff_tables: tables.distinct_tables(),
        partitions_generated: partitions.len(),
        partitions_kept: kept.len(),
        distinct_clusters: clusters.len(),
        tsp_calls,
        tsp_backend: cfg.tsp_backend,
        length_trace: trace,
        length_before_global,
        seed: cfg.seed,
        config: cfg.clone(),
    };
    Ok((layout, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub optimizer: Optimizer,
    pub p: usize,
    pub mean_optimality: f64,
    pub min_optimality: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub instances: usize,
    pub nodes: usize,
    pub shots: usize,
    pub max_evals: usize,
    pub seed: u64,
    /// Mean optimality of uniformly random visit orders.
    pub random_baseline: f64,
    pub rows: Vec<TuneRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuneConfig {
    pub instances: usize,
    pub nodes: usize,
    pub reps: Vec<usize>,
    pub optimizers: Vec<Optimizer>,
    pub shots: usize,
    pub max_evals: usize,
    pub penalty_factor: f64,
    pub ramp_fraction: f64,
    pub seed: u64,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            instances: 30,
            nodes: 4,
            reps: (1..=5).collect(),
            optimizers: vec![Optimizer::NelderMead],
            shots: 1000,
            max_evals: QaoaConfig::default().max_evals,
            penalty_factor: QaoaConfig::default().penalty_factor,
            ramp_fraction: QaoaConfig::default().ramp_fraction,
            seed: 0,
        }
    }
}

/// Symmetric matrices with off-diagonal entries uniform in `[0, 1)`.
pub fn random_instances(count: usize, nodes: usize, seed: u64) -> Vec<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut d = vec![vec![0.0; nodes]; nodes];
            for i in 0..nodes {
                for j in i + 1..nodes {
                    let v: f64 = rng.gen();
                    d[i][j] = v;
                    d[j][i] = v;
                }
            }
            d
        })
        .collect()
}

/// Mean optimality of `samples` uniformly random orders per instance.
pub fn random_path_baseline(instances: &[Vec<Vec<f64>>], samples: usize, seed: u64) -> Result<f64, TspError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total = 0.0;
    for d in instances {
        let (lo, hi) = path_extremes(d)?;
        let mut sigma: Vec<usize> = (0..d.len()).collect();
        for _ in 0..samples {
            sigma.shuffle(&mut rng);
            let len = path_length(d, &sigma)?;
            total += if hi > lo { 1.0 - (len - lo) / (hi - lo) } else { 1.0 };
        }
    }
    Ok(total / (instances.len() * samples) as f64)
}

/// Mean QAOA optimality for every (optimizer, p) over seeded random instances.
pub fn tune_qaoa(cfg: &TuneConfig) -> Result<TuneReport, QaoaError> {
    if cfg.nodes * cfg.nodes > QUBIT_CAP {
        return Err(QaoaError::QubitCap { qubits: cfg.nodes * cfg.nodes, cap: QUBIT_CAP });
    }
    if cfg.instances == 0 {
        return Err(QaoaError::InvalidConfig("at least one instance is needed".into()));
    }
    let instances = random_instances(cfg.instances, cfg.nodes, cfg.seed);
    let random_baseline = random_path_baseline(&instances, 1000, cfg.seed.wrapping_add(1))?;
    let mut rows = Vec::new();
    for &optimizer in &cfg.optimizers {
        for &p in &cfg.reps {
            let t = Instant::now();
            let scores: Vec<f64> = instances
                .par_iter()
                .enumerate()
                .map(|(k, d)| {
                    let q = QaoaConfig {
                        p,
                        shots: cfg.shots,
                        optimizer,
                        max_evals: cfg.max_evals,
                        penalty_factor: cfg.penalty_factor,
                        ramp_fraction: cfg.ramp_fraction,
                        seed: cfg.seed.wrapping_add(k as u64),
                    };
                    let path = run_qaoa(d, &q)?.path;
                    Ok(optimality(d, &path.sigma)?)
                })
                .collect::<Result<_, QaoaError>>()?;
            let row = TuneRow {
                optimizer,
                p,
                mean_optimality: scores.iter().sum::<f64>() / scores.len() as f64,
                min_optimality: scores.iter().cloned().fold(f64::INFINITY, f64::min),
                wall_time_s: t.elapsed().as_secs_f64(),
            };
            info!("{:?} p={}: {:.1}%", optimizer, p, 100.0 * row.mean_optimality);
            rows.push(row);
        }
    }
    Ok(TuneReport {
        instances: cfg.instances,
        nodes: cfg.nodes,
        shots: cfg.shots,
        max_evals: cfg.max_evals,
        seed: cfg.seed,
        random_baseline,
        rows,
    })
}
