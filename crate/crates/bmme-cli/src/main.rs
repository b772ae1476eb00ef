//! Experiment runner: solve a single instance, generate synthetic data, or
//! benchmark algorithm variants head to head with median objective-minus-best
//! curves.

mod bench;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bmme::beta_nmf::{kkt_residual, solve_mue, BetaNmfConfig, SolveOutcome};
use bmme::divergence::Beta;
use bmme::engine::RunConfig;
use bmme::extrapolation::{ExtrapolationConfig, Schedule, DEFAULT_C, DEFAULT_Q};
use bmme::matrixio::{
    read_matrix, synth_lowrank, write_matrix, write_trace, MatrixFormat, NoiseKind, NonnegMatrix,
    SyntheticSpec, TraceFormat,
};
use bmme::minvol::{solve_minvol, MinVolConfig};

#[derive(Parser)]
#[command(
    name = "bmme",
    version,
    about = "Multiplicative-update NMF solvers with safeguarded extrapolation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on a matrix and write its convergence trace.
    Solve(SolveArgs),
    /// Run algorithms x seeds, aggregate median curves and crossing
    /// statistics.
    Bench(bench::BenchArgs),
    /// Generate a synthetic low-rank matrix (optionally with ground-truth
    /// factors).
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    /// Matrix Market (coordinate or array)
    Mm,
    Csv,
    /// dense binary: magic NMAT, u64 dims, little-endian f64 row-major
    Bin,
}

impl From<FormatArg> for MatrixFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Mm => MatrixFormat::MatrixMarket,
            FormatArg::Csv => MatrixFormat::Csv,
            FormatArg::Bin => MatrixFormat::DenseBinary,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TraceFormatArg {
    Csv,
    Json,
}

impl From<TraceFormatArg> for TraceFormat {
    fn from(f: TraceFormatArg) -> Self {
        match f {
            TraceFormatArg::Csv => TraceFormat::Csv,
            TraceFormatArg::Json => TraceFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ScheduleArg {
    Nesterov,
    Classical,
    None,
}

impl From<ScheduleArg> for Schedule {
    fn from(s: ScheduleArg) -> Self {
        match s {
            ScheduleArg::Nesterov => Schedule::Nesterov,
            ScheduleArg::Classical => Schedule::Classical,
            ScheduleArg::None => Schedule::None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, ValueEnum)]
pub enum Algo {
    /// multiplicative updates for beta-NMF
    Mu,
    /// extrapolated multiplicative updates for beta-NMF
    Mue,
    /// min-vol KL-NMF (simplex-constrained W)
    Minvol,
    /// extrapolated min-vol KL-NMF
    MinvolE,
}

impl Algo {
    pub fn name(&self) -> &'static str {
        match self {
            Algo::Mu => "mu",
            Algo::Mue => "mue",
            Algo::Minvol => "minvol",
            Algo::MinvolE => "minvol-e",
        }
    }

    pub fn extrapolated(&self) -> bool {
        matches!(self, Algo::Mue | Algo::MinvolE)
    }

    pub fn plain_counterpart(&self) -> Option<Algo> {
        match self {
            Algo::Mue => Some(Algo::Mu),
            Algo::MinvolE => Some(Algo::Minvol),
            _ => None,
        }
    }
}

/// Flags shared by `solve` and `bench`.
#[derive(Args, Clone)]
pub struct SolverFlags {
    /// factorization rank
    #[arg(long)]
    pub rank: usize,
    /// divergence exponent in [1, 2]
    #[arg(long, default_value_t = 1.5)]
    pub beta: f64,
    /// entrywise lower bound on the factors
    #[arg(long, default_value_t = f64::EPSILON)]
    pub epsilon: f64,
    /// min-vol weight as the initial regularizer/fit ratio
    #[arg(long, default_value_t = 0.1)]
    pub lambda_tilde: f64,
    /// log-det shift
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// extrapolation schedule for the extrapolated algorithms
    #[arg(long, value_enum, default_value = "nesterov")]
    pub schedule: ScheduleArg,
    /// safeguard constant c
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,
    /// safeguard exponent q (> 1)
    #[arg(long, default_value_t = DEFAULT_Q)]
    pub q: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = f64::INFINITY)]
    pub max_seconds: f64,
    /// compute the KKT residual every k-th iteration (0 = never)
    #[arg(long, default_value_t = 0)]
    pub kkt_every: usize,
}

impl SolverFlags {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            max_iter: self.max_iter,
            max_seconds: self.max_seconds,
            trace_every: 1,
            stop_tol: 0.0,
            kkt_every: self.kkt_every,
        }
    }

    pub fn extrapolation(&self, algo: Algo) -> Result<ExtrapolationConfig, bmme::Error> {
        if algo.extrapolated() {
            ExtrapolationConfig::new(self.schedule.into(), self.c, self.q)
        } else {
            Ok(ExtrapolationConfig::none())
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// input matrix path
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverFlags,
    /// write the per-iteration trace here
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    trace_format: TraceFormatArg,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// rank of the generating factors
    #[arg(long)]
    rank_true: usize,
    #[arg(long, value_enum, default_value = "poisson")]
    noise: NoiseArg,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// output path for X
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    /// optional output paths for the ground-truth factors
    #[arg(long)]
    out_w: Option<PathBuf>,
    #[arg(long)]
    out_h: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum NoiseArg {
    None,
    Poisson,
    GaussianClipped,
}

impl From<NoiseArg> for NoiseKind {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::None => NoiseKind::None,
            NoiseArg::Poisson => NoiseKind::Poisson,
            NoiseArg::GaussianClipped => NoiseKind::GaussianClipped,
        }
    }
}

/// Dispatches one solver run.
pub fn run_algo(
    algo: Algo,
    x: &NonnegMatrix,
    flags: &SolverFlags,
    seed: u64,
) -> Result<SolveOutcome, bmme::Error> {
    let run = flags.run_config();
    let extrapolation = flags.extrapolation(algo)?;
    match algo {
        Algo::Mu | Algo::Mue => {
            let mut cfg = BetaNmfConfig::new(Beta::new(flags.beta)?, flags.rank);
            cfg.epsilon = flags.epsilon;
            cfg.seed = seed;
            solve_mue(x, &cfg, &run, &extrapolation)
        }
        Algo::Minvol | Algo::MinvolE => {
            let mut cfg = MinVolConfig::new(flags.rank, flags.lambda_tilde, flags.delta);
            cfg.epsilon = flags.epsilon;
            cfg.seed = seed;
            solve_minvol(x, &cfg, &run, &extrapolation)
        }
    }
}

/// The one-line JSON summary printed after a run.
pub fn summary_json(
    algo: Algo,
    seed: u64,
    x: &NonnegMatrix,
    flags: &SolverFlags,
    out: &SolveOutcome,
) -> serde_json::Value {
    let last = out.trace.records.last();
    let kkt = match algo {
        Algo::Mu | Algo::Mue => kkt_residual(
            &x.as_array().view(),
            &out.factors.w.view(),
            &out.factors.h.view(),
            Beta::new(flags.beta).expect("validated"),
            flags.epsilon,
        )
        .ok(),
        _ => None,
    };
    serde_json::json!({
        "algo": algo.name(),
        "seed": seed,
        "final_objective": last.map(|r| r.objective),
        "final_rel_objective": last.map(|r| r.rel_objective),
        "iters": out.iters,
        "wall_seconds": out.wall_seconds,
        "kkt_residual": kkt,
    })
}

fn cmd_solve(args: &SolveArgs) -> Result<(), String> {
    let x = read_matrix(&args.data, args.format.into()).map_err(|e| e.to_string())?;
    let out = run_algo(args.algo, &x, &args.solver, args.seed).map_err(|e| e.to_string())?;
    if let Some(path) = &args.trace {
        write_trace(&out.trace, path, args.trace_format.into()).map_err(|e| e.to_string())?;
    }
    println!(
        "{}",
        summary_json(args.algo, args.seed, &x, &args.solver, &out)
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), String> {
    let spec = SyntheticSpec {
        m: args.m,
        n: args.n,
        r_true: args.rank_true,
        noise: args.noise.into(),
        scale: args.scale,
        seed: args.seed,
    };
    let (x, w, h) = synth_lowrank(&spec).map_err(|e| e.to_string())?;
    write_matrix(&x, &args.out, args.format.into()).map_err(|e| e.to_string())?;
    if let Some(path) = &args.out_w {
        write_matrix(&w, path, args.format.into()).map_err(|e| e.to_string())?;
    }
    if let Some(path) = &args.out_h {
        write_matrix(&h, path, args.format.into()).map_err(|e| e.to_string())?;
    }
    println!(
        "{}",
        serde_json::json!({
            "out": args.out,
            "m": args.m,
            "n": args.n,
            "rank_true": args.rank_true,
            "seed": args.seed,
        })
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Bench(args) => bench::cmd_bench(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
