//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line (run with `--nocapture` to see them).

mod common;

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use common::{bundled, random_symmetric, star_polygon};
use opus_core::compat::{compute_nff, polar_place, DiscretizationConfig};
use opus_core::geometry::{intersection_area, overlap, Polygon, Pose};
use opus_core::packing::{global_optimize, local_optimize, pack_rectangles, satisfies_disjunctions, validate_layout, Layout};
use opus_core::pipeline::{solve, tune_qaoa, SolveReport, SolverConfig, TspBackend, TuneConfig};
use opus_core::qaoa::{bits_of, cost_diagonal, evolve, postprocess, CostDiagonal, Optimizer, StateVector};
use opus_core::tsp::{brute_force, build_qubo, decode, encode, is_permutation, next_permutation, path_length, qubo_energy};

fn report(n: u32, ok: bool, detail: String) {
    println!("criterion {n}: {} {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n}: {detail}");
}

fn puzzle_run(name: &str, partitions: usize, backend: TspBackend) -> SolveReport {
    let inst = bundled(name);
    let mut cfg = SolverConfig::new(90.0, 5.0).unwrap();
    cfg.n_max = 4;
    cfg.n_partitions = partitions;
    cfg.tsp_backend = backend;
    cfg.qaoa.p = 5;
    cfg.qaoa.shots = 1000;
    let (layout, rep) = solve(&inst.pieces, inst.height, &cfg, None).expect("solve succeeds");
    // solve validates internally; check again against the returned layout
    let eps = opus_core::compat::default_overlap_eps(&inst.pieces);
    assert!(validate_layout(&inst.pieces, &layout, eps).is_empty());
    rep
}

fn puzzle1_brute() -> &'static SolveReport {
    static RUN: OnceLock<SolveReport> = OnceLock::new();
    RUN.get_or_init(|| puzzle_run("puzzle1", 20, TspBackend::Brute))
}

#[test]
fn criterion_1_puzzle1_brute() {
    let r = puzzle1_brute();
    report(
        1,
        r.waste_ratio <= 0.178,
        format!("PUZZLE1 brute: waste {:.2}% (limit 17.8%), L={:.2}, {:.1}s", 100.0 * r.waste_ratio, r.length, r.times.total_s),
    );
}

#[test]
fn criterion_2_puzzle2_brute() {
    let r = puzzle_run("puzzle2", 40, TspBackend::Brute);
    report(
        2,
        r.waste_ratio <= 0.096,
        format!("PUZZLE2 brute: waste {:.2}% (limit 9.6%), L={:.2}, {:.1}s", 100.0 * r.waste_ratio, r.length, r.times.total_s),
    );
}

#[test]
fn criterion_3_puzzle1_qaoa_parity() {
    let q = puzzle_run("puzzle1", 20, TspBackend::Qaoa);
    let b = puzzle1_brute();
    assert!(q.tsp_calls > 0);
    report(
        3,
        q.waste_ratio <= b.waste_ratio + 0.05,
        format!(
            "PUZZLE1 qaoa: waste {:.2}% vs brute {:.2}% (+5 pp allowed), {} TSP calls, {:.1}s",
            100.0 * q.waste_ratio,
            100.0 * b.waste_ratio,
            q.tsp_calls,
            q.times.total_s
        ),
    );
}

#[test]
fn criterion_4_qaoa_tuning() {
    let cfg = TuneConfig {
        instances: 30,
        nodes: 4,
        reps: vec![5],
        optimizers: vec![Optimizer::default()],
        shots: 1000,
        seed: 2024,
        ..TuneConfig::default()
    };
    let t = tune_qaoa(&cfg).unwrap();
    let row = &t.rows[0];
    report(
        4,
        row.mean_optimality >= 0.70 && row.mean_optimality > t.random_baseline,
        format!(
            "tune p=5 {:?}: mean optimality {:.3} (floor 0.70), random paths {:.3}, {:.1}s",
            row.optimizer, row.mean_optimality, t.random_baseline, row.wall_time_s
        ),
    );
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut sigma: Vec<usize> = (0..n).collect();
    let mut all = vec![sigma.clone()];
    while next_permutation(&mut sigma) {
        all.push(sigma.clone());
    }
    all
}

#[test]
fn criterion_5_qubo_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for n in [3usize, 4] {
        for _ in 0..50 {
            let d = random_symmetric(&mut rng, n);
            let q = build_qubo(&d, None).unwrap();
            let mut min_valid = f64::INFINITY;
            for sigma in permutations(n) {
                let e = qubo_energy(&q, &encode(&sigma)).unwrap();
                assert_eq!(e, path_length(&d, &sigma).unwrap(), "{sigma:?}");
                min_valid = min_valid.min(e);
            }
            assert_eq!(min_valid, brute_force(&d).unwrap().total);
            if n == 3 {
                let (mut max_valid, mut min_invalid) = (f64::NEG_INFINITY, f64::INFINITY);
                for k in 0..1usize << 9 {
                    let x = bits_of(k, 9);
                    let e = qubo_energy(&q, &x).unwrap();
                    if decode(&x).is_some() {
                        max_valid = max_valid.max(e);
                    } else {
                        min_invalid = min_invalid.min(e);
                    }
                }
                assert!(min_invalid > max_valid, "{min_invalid} <= {max_valid}");
            }
            checked += 1;
        }
    }
    report(5, true, format!("{checked} random matrices: valid minimum equals brute force exactly; n=3 energy gap holds"));
}

#[test]
fn criterion_6_repair_totality() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for n in [3usize, 4] {
        for t in 0..10_000u64 {
            let density = rng.gen_range(0.05..0.95);
            let x: Vec<bool> = (0..n * n).map(|_| rng.gen_bool(density)).collect();
            let sigma = postprocess(&x, t);
            assert!(is_permutation(&sigma, n), "{x:?} -> {sigma:?}");
        }
        for sigma in permutations(n) {
            assert_eq!(postprocess(&encode(&sigma), 0), sigma);
        }
    }
    report(6, true, "2x10^4 random bitstrings repaired to paths; every valid bitstring is a fixed point".into());
}

#[test]
fn criterion_7_simulator_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..=4);
        let p = rng.gen_range(1..=5);
        let diag = cost_diagonal(&build_qubo(&random_symmetric(&mut rng, n), None).unwrap()).unwrap();
        let gamma: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let beta: Vec<f64> = (0..p).map(|_| rng.gen_range(-3.0..3.0)).collect();
        worst = worst.max((evolve(&gamma, &beta, &diag).unwrap().norm_sqr() - 1.0).abs());
    }
    assert!(worst < 1e-9, "norm error {worst}");

    for n in [2usize, 3] {
        let diag = cost_diagonal(&build_qubo(&random_symmetric(&mut rng, n), None).unwrap()).unwrap();
        let sv = evolve(&[0.0; 3], &[0.0; 3], &diag).unwrap();
        assert_eq!(sv, StateVector::uniform(n * n));
    }

    // n = 2 nodes: four qubits, every basis state
    let q = 4;
    let zero = CostDiagonal::new(q, vec![0.0; 1 << q]);
    let phase = Complex64::new(0.0, -1.0).powu(q as u32);
    for k in 0..1usize << q {
        let mut sv = StateVector::basis(q, k);
        sv.apply_phase(0.7, &zero);
        sv.apply_mixer(std::f64::consts::FRAC_PI_2);
        let flipped = k ^ ((1 << q) - 1);
        for (j, a) in sv.amplitudes.iter().enumerate() {
            let want = if j == flipped { phase } else { Complex64::new(0.0, 0.0) };
            assert!((a - want).norm() < 1e-12, "basis {k}: amplitude {j} = {a}");
        }
    }
    report(7, true, format!("max norm error {worst:.1e} over 100 draws; identity at zero angles; pi/2 mixer flips all qubits"));
}

/// Fuzz layout: pieces left to right in random orientations with random gaps
/// and heights.
fn fuzz_layout(rng: &mut impl Rng, pieces: &[Polygon]) -> Layout {
    let height = 1.5 * pieces.iter().map(|p| 2.0 * p.circumradius()).fold(0.0, f64::max);
    let mut cursor = 0.0;
    let mut poses = Vec::new();
    for p in pieces {
        let angle = 90.0 * rng.gen_range(0..4) as f64;
        let b = p.posed(Pose::new(0.0, 0.0, angle)).bbox();
        let y = rng.gen_range(0.0..height - b.height);
        poses.push(Pose::new(cursor - b.x, y - b.y, angle));
        cursor += b.length + rng.gen_range(0.0..0.5 * b.length);
    }
    Layout::from_poses(pieces, height, poses)
}

#[test]
fn criterion_8_geometry_and_packing_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);

    let cfg = DiscretizationConfig::uniform(45.0, 90.0, 0.25).unwrap();
    let mut placements = 0;
    for _ in 0..1000 {
        let a = star_polygon(&mut rng, 7, 1.0, 3.0);
        let b = star_polygon(&mut rng, 7, 1.0, 3.0);
        let eps = 1e-6 * a.area().min(b.area());
        let t = compute_nff(&a, &b, &cfg, eps).unwrap();
        for e in &t.entries {
            let placed = polar_place(&a, &b, e.r, e.theta, e.phi);
            assert!(!overlap(&a, &placed, eps), "overlap {}", intersection_area(&a, &placed));
            placements += 1;
        }
    }

    let orientations = [0.0, 90.0, 180.0, 270.0];
    for _ in 0..200 {
        let count = rng.gen_range(2..=5);
        let pieces: Vec<Polygon> = (0..count).map(|_| star_polygon(&mut rng, 6, 1.0, 3.0)).collect();
        let eps = 1e-6 * pieces.iter().map(Polygon::area).fold(f64::INFINITY, f64::min);
        let layout = fuzz_layout(&mut rng, &pieces);
        assert!(validate_layout(&pieces, &layout, eps).is_empty());
        let local = local_optimize(&pieces, &layout, 0.25, eps);
        assert!(local.length <= layout.length);
        assert!(validate_layout(&pieces, &local, eps).is_empty());
        let global = global_optimize(&pieces, &local, 20, &orientations, 0.25, eps, 10);
        assert!(global.length <= local.length);
        assert!(validate_layout(&pieces, &global, eps).is_empty());
    }

    let mut packed = 0;
    for _ in 0..500 {
        let count = rng.gen_range(1..=8);
        let items: Vec<(f64, f64)> = (0..count).map(|_| (rng.gen_range(0.5..5.0), rng.gen_range(0.5..5.0))).collect();
        let height = items.iter().map(|it| it.1).fold(0.0, f64::max) * rng.gen_range(1.0..2.0);
        let length = items.iter().map(|it| it.0).sum::<f64>() * rng.gen_range(0.5..1.0);
        let rotate = rng.gen_bool(0.5);
        let Some(pl) = pack_rectangles(&items, (length, height), rotate) else {
            continue;
        };
        packed += 1;
        assert!(satisfies_disjunctions(&items, &pl, (length, height)));
        let rects: Vec<_> = items.iter().zip(&pl).map(|(&it, p)| p.extent(it)).collect();
        let t = 1e-9 * (length + height);
        for (i, a) in rects.iter().enumerate() {
            assert!(a.x >= -t && a.y >= -t && a.right() <= length + t && a.top() <= height + t);
            assert!(rotate || !pl[i].rotated);
            for b in &rects[i + 1..] {
                assert!(a.right() <= b.x + t || b.right() <= a.x + t || a.top() <= b.y + t || b.top() <= a.y + t);
            }
        }
    }
    assert!(packed > 100, "only {packed} bins packed");
    report(
        8,
        true,
        format!("{placements} NFF placements overlap-free; 200 layouts monotone and valid; {packed}/500 rectangle bins satisfy the disjunctions"),
    );
}

#[test]
fn criterion_9_non_reproducible_scope() {
    println!(
        "criterion 9: PASS (scope) real-hardware runs, the alternating-operator ansatz tables and the external \
         benchmark waste figures are not targets; criteria 5-8 cover those code paths"
    );
}
