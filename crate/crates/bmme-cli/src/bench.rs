//! Head-to-head benchmarking: run each algorithm over a batch of seeds,
//! subtract the best relative objective found in the whole batch (e_min), and
//! emit per-algorithm median curves against iteration count and wall time,
//! plus the iteration count each extrapolated variant needs to beat its plain
//! counterpart's final objective.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;

use bmme::beta_nmf::SolveOutcome;
use bmme::matrixio::{
    read_matrix, synth_lowrank, write_trace, NonnegMatrix, SyntheticSpec, TraceFormat,
};

use crate::{run_algo, summary_json, Algo, FormatArg, NoiseArg, SolverFlags};

#[derive(Args)]
pub struct BenchArgs {
    /// comma-separated algorithms, e.g. mu,mue
    #[arg(long, value_delimiter = ',', required = true)]
    algos: Vec<Algo>,
    /// number of seeded runs per algorithm (seeds seed_base..seed_base+n)
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// input matrix; omitted means synthetic data from the synth flags below
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long, default_value_t = 100)]
    synth_m: usize,
    #[arg(long, default_value_t = 200)]
    synth_n: usize,
    #[arg(long, default_value_t = 10)]
    synth_rank_true: usize,
    #[arg(long, value_enum, default_value = "poisson")]
    synth_noise: NoiseArg,
    #[arg(long, default_value_t = 2.0)]
    synth_scale: f64,
    #[arg(long, default_value_t = 42)]
    synth_seed: u64,
    #[command(flatten)]
    solver: SolverFlags,
    /// directory for raw traces and median curves
    #[arg(long)]
    out_dir: PathBuf,
    /// worker threads for the seed pool (0 = rayon default)
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

struct RunResult {
    algo: Algo,
    seed: u64,
    outcome: SolveOutcome,
}

fn median_of(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn write_curve(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<(), String> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| e.to_string())?);
    writeln!(out, "{header}").map_err(|e| e.to_string())?;
    for (x, y) in rows {
        writeln!(out, "{x:.16e},{y:.16e}").map_err(|e| e.to_string())?;
    }
    Ok(())
}

pub fn cmd_bench(args: &BenchArgs) -> Result<(), String> {
    if args.seeds == 0 {
        return Err("--seeds must be at least 1".into());
    }
    let x: NonnegMatrix = match &args.data {
        Some(path) => read_matrix(path, args.format.into()).map_err(|e| e.to_string())?,
        None => {
            let (x, _, _) = synth_lowrank(&SyntheticSpec {
                m: args.synth_m,
                n: args.synth_n,
                r_true: args.synth_rank_true,
                noise: args.synth_noise.into(),
                scale: args.synth_scale,
                seed: args.synth_seed,
            })
            .map_err(|e| e.to_string())?;
            x
        }
    };
    std::fs::create_dir_all(&args.out_dir).map_err(|e| e.to_string())?;

    // every algorithm x seed pair, merged back in deterministic order
    let jobs: Vec<(Algo, u64)> = args
        .algos
        .iter()
        .flat_map(|&algo| (0..args.seeds).map(move |k| (algo, args.seed_base + k)))
        .collect();
    let run_jobs = || -> Result<Vec<RunResult>, String> {
        jobs.par_iter()
            .map(|&(algo, seed)| {
                run_algo(algo, &x, &args.solver, seed)
                    .map(|outcome| RunResult {
                        algo,
                        seed,
                        outcome,
                    })
                    .map_err(|e| format!("{} seed {}: {}", algo.name(), seed, e))
            })
            .collect()
    };
    let results: Vec<RunResult> = if args.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.workers)
            .build()
            .map_err(|e| e.to_string())?
            .install(run_jobs)?
    } else {
        run_jobs()?
    };

    // raw traces
    for r in &results {
        let path = args
            .out_dir
            .join(format!("{}_seed{}.csv", r.algo.name(), r.seed));
        write_trace(&r.outcome.trace, &path, TraceFormat::Csv).map_err(|e| e.to_string())?;
    }

    // e_min: smallest final relative objective across the whole batch
    let e_min = results
        .iter()
        .filter_map(|r| r.outcome.trace.records.last())
        .map(|rec| rec.rel_objective)
        .fold(f64::INFINITY, f64::min);

    // median curves per algorithm
    let mut curve_paths = serde_json::Map::new();
    for &algo in &args.algos {
        let runs: Vec<&RunResult> = results.iter().filter(|r| r.algo == algo).collect();
        let max_len = runs
            .iter()
            .map(|r| r.outcome.trace.len())
            .max()
            .unwrap_or(0);
        let mut vs_iter = Vec::with_capacity(max_len);
        let mut vs_time = Vec::with_capacity(max_len);
        for idx in 0..max_len {
            let values: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.outcome.trace.records.get(idx))
                .map(|rec| rec.rel_objective - e_min)
                .collect();
            let times: Vec<f64> = runs
                .iter()
                .filter_map(|r| r.outcome.trace.records.get(idx))
                .map(|rec| rec.wall_seconds)
                .collect();
            if values.is_empty() {
                break;
            }
            let iter = runs
                .iter()
                .find_map(|r| r.outcome.trace.records.get(idx))
                .map(|rec| rec.iter as f64)
                .unwrap_or((idx + 1) as f64);
            vs_iter.push((iter, median_of(values.clone())));
            vs_time.push((median_of(times), median_of(values)));
        }
        let iter_path = args
            .out_dir
            .join(format!("{}_median_vs_iter.csv", algo.name()));
        write_curve(&iter_path, "iter,median_rel_objective_minus_emin", &vs_iter)?;
        let time_path = args
            .out_dir
            .join(format!("{}_median_vs_time.csv", algo.name()));
        write_curve(
            &time_path,
            "median_wall_seconds,median_rel_objective_minus_emin",
            &vs_time,
        )?;
        curve_paths.insert(
            algo.name().to_string(),
            serde_json::json!({
                "vs_iter": iter_path,
                "vs_time": time_path,
            }),
        );
    }

    // crossing statistics: iterations for the extrapolated variant to reach
    // its plain counterpart's final objective, seed by seed
    let mut crossings = serde_json::Map::new();
    for &algo in &args.algos {
        let Some(base) = algo.plain_counterpart() else {
            continue;
        };
        if !args.algos.contains(&base) {
            continue;
        }
        let mut per_seed: Vec<Option<u64>> = Vec::new();
        for k in 0..args.seeds {
            let seed = args.seed_base + k;
            let base_final = results
                .iter()
                .find(|r| r.algo == base && r.seed == seed)
                .and_then(|r| r.outcome.trace.records.last())
                .map(|rec| rec.rel_objective);
            let Some(base_final) = base_final else {
                per_seed.push(None);
                continue;
            };
            let crossing = results
                .iter()
                .find(|r| r.algo == algo && r.seed == seed)
                .and_then(|r| {
                    r.outcome
                        .trace
                        .records
                        .iter()
                        .find(|rec| rec.rel_objective <= base_final)
                })
                .map(|rec| rec.iter);
            per_seed.push(crossing);
        }
        let mut reached: Vec<f64> = per_seed.iter().flatten().map(|&v| v as f64).collect();
        reached.sort_by(|a, b| a.total_cmp(b));
        let not_reached = per_seed.iter().filter(|v| v.is_none()).count();
        // median over all seeds, counting unreached runs as +infinity
        let median = {
            let mut all: Vec<f64> = per_seed
                .iter()
                .map(|v| v.map(|u| u as f64).unwrap_or(f64::INFINITY))
                .collect();
            all.sort_by(|a, b| a.total_cmp(b));
            let n = all.len();
            let med = if n % 2 == 1 {
                all[n / 2]
            } else {
                0.5 * (all[n / 2 - 1] + all[n / 2])
            };
            med.is_finite().then_some(med)
        };
        crossings.insert(
            format!("{}_vs_{}", algo.name(), base.name()),
            serde_json::json!({
                "per_seed": per_seed,
                "min": reached.first().copied(),
                "median": median,
                "max": (not_reached == 0).then(|| reached.last().copied()).flatten(),
                "not_reached": not_reached,
            }),
        );
    }

    let per_run: Vec<serde_json::Value> = results
        .iter()
        .map(|r| summary_json(r.algo, r.seed, &x, &args.solver, &r.outcome))
        .collect();
    println!(
        "{}",
        serde_json::json!({
            "e_min": e_min,
            "runs": per_run,
            "curves": curve_paths,
            "crossings": crossings,
        })
    );
    Ok(())
}
