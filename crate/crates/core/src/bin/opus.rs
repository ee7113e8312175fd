use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use opus_core::compat::{default_overlap_eps, distance_matrices_cached, pair_distance, DiscretizationConfig, NffCache};
use opus_core::interface::{load_instance, write_report, write_svg, Instance};
use opus_core::pipeline::{solve, tune_qaoa, SolverConfig, TspBackend, TuneConfig};
use opus_core::qaoa::Optimizer;

#[derive(Parser)]
#[command(name = "opus", version, about = "Irregular strip packing via pairwise compatibility and cluster ordering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Backend {
    Brute,
    Qaoa,
}

#[derive(Clone, Copy, ValueEnum)]
enum OptimizerArg {
    NelderMead,
    Spsa,
    All,
}

#[derive(Subcommand)]
enum Command {
    /// Pack an instance and write the layout and a report.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "brute")]
        tsp: Backend,
        /// QAOA circuit repetitions.
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 1000)]
        shots: usize,
        #[arg(long, default_value_t = 400)]
        max_evals: usize,
        #[arg(long, value_enum, default_value = "nelder-mead")]
        optimizer: OptimizerArg,
        /// QUBO constraint penalty as a multiple of the largest distance.
        #[arg(long, default_value_t = 1.2)]
        penalty_factor: f64,
        /// Share of the evaluation budget spent on linear angle schedules.
        #[arg(long, default_value_t = 0.5)]
        ramp_fraction: f64,
        /// Orientation step in degrees; defaults to the instance's, else 90.
        #[arg(long)]
        rotation_step: Option<f64>,
        /// Step of the orbit angle around the previous piece, in degrees.
        #[arg(long, default_value_t = 5.0)]
        theta_step: f64,
        #[arg(long, default_value_t = 5.0)]
        delta_r: f64,
        #[arg(long, default_value_t = 4)]
        max_cluster: usize,
        #[arg(long, default_value_t = 20)]
        partitions: usize,
        /// Smallest cluster solved with QAOA under `--tsp qaoa`.
        #[arg(long, default_value_t = 3)]
        qaoa_min_size: usize,
        #[arg(long, default_value_t = 100)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_svg: Option<PathBuf>,
        #[arg(long)]
        out_report: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Mean QAOA optimality on random symmetric distance matrices.
    TuneQaoa {
        #[arg(long, default_value_t = 30)]
        instances: usize,
        #[arg(long, default_value_t = 4)]
        nodes: usize,
        #[arg(long, default_value_t = 5)]
        reps_max: usize,
        #[arg(long, default_value_t = 1000)]
        shots: usize,
        #[arg(long, default_value_t = 400)]
        max_evals: usize,
        #[arg(long, value_enum, default_value = "nelder-mead")]
        optimizer: OptimizerArg,
        /// QUBO constraint penalty as a multiple of the largest distance.
        #[arg(long, default_value_t = 1.2)]
        penalty_factor: f64,
        /// Share of the evaluation budget spent on linear angle schedules.
        #[arg(long, default_value_t = 0.5)]
        ramp_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Dump the no-fit table of one ordered piece pair.
    Nff {
        #[arg(long)]
        instance: PathBuf,
        /// Fixed and moving piece indices, e.g. `0,1`.
        #[arg(long, value_parser = parse_pair)]
        pair: (usize, usize),
        #[arg(long)]
        rotation_step: Option<f64>,
        #[arg(long, default_value_t = 5.0)]
        theta_step: f64,
        #[arg(long, default_value_t = 5.0)]
        delta_r: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected i,j")?;
    Ok((a.trim().parse().map_err(|e| format!("{e}"))?, b.trim().parse().map_err(|e| format!("{e}"))?))
}

/// Error with the category printed on failure and the matching exit code.
struct Failure {
    category: &'static str,
    message: String,
}

impl Failure {
    fn new(category: &'static str, e: impl std::fmt::Display) -> Self {
        Self { category, message: e.to_string() }
    }

    fn code(&self) -> u8 {
        match self.category {
            "usage" | "config" | "instance" | "discretization" => 2,
            "infeasible" => 3,
            "io" => 4,
            _ => 1,
        }
    }
}

fn optimizers(arg: OptimizerArg) -> Vec<Optimizer> {
    match arg {
        OptimizerArg::NelderMead => vec![Optimizer::NelderMead],
        OptimizerArg::Spsa => vec![Optimizer::Spsa],
        OptimizerArg::All => vec![Optimizer::NelderMead, Optimizer::Spsa],
    }
}

fn load(path: &PathBuf) -> Result<Instance, Failure> {
    load_instance(path).map_err(|e| Failure::new(e.category(), format!("{}: {e}", path.display())))
}

fn write_json(path: &Option<PathBuf>, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::new("internal", e))?;
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Failure::new("io", format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve {
            instance,
            tsp,
            reps,
            shots,
            max_evals,
            optimizer,
            penalty_factor,
            ramp_fraction,
            rotation_step,
            theta_step,
            delta_r,
            max_cluster,
            partitions,
            qaoa_min_size,
            grid,
            seed,
            out_svg,
            out_report,
            workers,
        } => {
            let inst = load(&instance)?;
            let step = rotation_step.or(inst.rotation_step_deg).unwrap_or(90.0);
            let mut cfg = SolverConfig::new(step, delta_r).map_err(|e| Failure::new("config", e))?;
            cfg.discretization = DiscretizationConfig::uniform(theta_step, step, delta_r).map_err(|e| Failure::new("config", e))?;
            cfg.n_max = max_cluster;
            cfg.n_partitions = partitions;
            cfg.tsp_backend = match tsp {
                Backend::Brute => TspBackend::Brute,
                Backend::Qaoa => TspBackend::Qaoa,
            };
            cfg.qaoa.p = reps;
            cfg.qaoa.shots = shots;
            cfg.qaoa.max_evals = max_evals;
            cfg.qaoa.penalty_factor = penalty_factor;
            cfg.qaoa.ramp_fraction = ramp_fraction;
            cfg.qaoa.optimizer = match optimizer {
                OptimizerArg::Spsa => Optimizer::Spsa,
                _ => Optimizer::NelderMead,
            };
            cfg.qaoa.seed = seed;
            cfg.qaoa_min_size = qaoa_min_size;
            cfg.grid_divisions = grid;
            cfg.seed = seed;
            cfg.workers = workers;

            let cache = NffCache::from_env();
            let (layout, report) = solve(&inst.pieces, inst.height, &cfg, cache.as_ref()).map_err(|e| Failure::new(e.category(), e))?;
            if let Some(p) = &out_svg {
                write_svg(&inst.pieces, &layout, p).map_err(|e| Failure::new("io", format!("{}: {e}", p.display())))?;
            }
            if let Some(p) = &out_report {
                write_report(&report, p).map_err(|e| Failure::new("io", format!("{}: {e}", p.display())))?;
            }
            println!(
                "{}: L={:.2} waste={:.2}% pieces={} partitions={}/{} time={:.1}s",
                inst.name,
                report.length,
                100.0 * report.waste_ratio,
                report.pieces,
                report.partitions_kept,
                report.partitions_generated,
                report.times.total_s
            );
            Ok(())
        }
        Command::TuneQaoa {
            instances,
            nodes,
            reps_max,
            shots,
            max_evals,
            optimizer,
            penalty_factor,
            ramp_fraction,
            seed,
            out,
            workers,
        } => {
            let cfg = TuneConfig {
                instances,
                nodes,
                reps: (1..=reps_max).collect(),
                optimizers: optimizers(optimizer),
                shots,
                max_evals,
                penalty_factor,
                ramp_fraction,
                seed,
            };
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers.max(1))
                .build()
                .map_err(|e| Failure::new("config", e))?;
            let report = pool.install(|| tune_qaoa(&cfg)).map_err(|e| Failure::new("tsp", e))?;
            for row in &report.rows {
                eprintln!(
                    "{:<12} p={}  optimality={:5.1}%  time={:.1}s",
                    format!("{:?}", row.optimizer),
                    row.p,
                    100.0 * row.mean_optimality,
                    row.wall_time_s
                );
            }
            eprintln!("random paths: {:5.1}%", 100.0 * report.random_baseline);
            write_json(&out, &report)
        }
        Command::Nff {
            instance,
            pair: (i, j),
            rotation_step,
            theta_step,
            delta_r,
            out,
        } => {
            let inst = load(&instance)?;
            let n = inst.pieces.len();
            if i >= n || j >= n {
                return Err(Failure::new("usage", format!("pair ({i},{j}) out of range for {n} pieces")));
            }
            let step = rotation_step.or(inst.rotation_step_deg).unwrap_or(90.0);
            let disc = DiscretizationConfig::uniform(theta_step, step, delta_r).map_err(|e| Failure::new("config", e))?;
            let cache = NffCache::from_env();
            let (m, tables) = distance_matrices_cached(&inst.pieces, &disc, cache.as_ref()).map_err(|e| Failure::new("discretization", e))?;
            let table = tables.get(i, j);
            let best = pair_distance(&inst.pieces[i], &inst.pieces[j], table);
            let doc = json!({
                "pair": [i, j],
                "overlap_eps": default_overlap_eps(&inst.pieces),
                "distance": m.d[i][j],
                "incompatibility": m.gi[i][j],
                "best": best,
                "table": table,
            });
            write_json(&out, &doc)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.category, "message": f.message }));
            ExitCode::from(f.code())
        }
    }
}
