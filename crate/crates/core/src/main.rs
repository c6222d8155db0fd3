use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sepsaddle::experiment::{self, DataSource, ExperimentConfig, VerifyOptions};
use sepsaddle::{Error, LossKind, Variant};

#[derive(Parser)]
#[command(name = "sepsaddle", version, about = "Adaptive primal-dual coordinate solvers for regularized ERM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run a (solver, lambda, seed) grid and write convergence traces.
    Solve(SolveArgs),
    /// Check the step-size theory numerically.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// TOML file with the same keys as these flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// LIBSVM path (optionally .gz) or `synthetic:n=..,d=..[,seed=..]`.
    #[arg(long)]
    data: Option<DataSource>,
    #[arg(long)]
    loss: Option<LossKind>,
    #[arg(long, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    solver: Option<Vec<Variant>>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    passes: Option<f64>,
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long)]
    seed_base: Option<u64>,
    /// Passes between trace rows.
    #[arg(long)]
    stride: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Feature dimension for LIBSVM input.
    #[arg(long)]
    dim: Option<usize>,
    /// Append a constant feature.
    #[arg(long)]
    bias: bool,
    /// Fill elapsed_ms from the wall clock.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    newton_iters: Option<usize>,
    /// Iterations between exact recomputations of the dual aggregate.
    #[arg(long)]
    r_recompute: Option<u64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Random instances for the positive-semidefiniteness check.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, hide = true)]
    corrupt_theta: bool,
}

fn build_config(args: SolveArgs) -> Result<ExperimentConfig, Error> {
    let mut config = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let data = args.data.clone().ok_or_else(|| Error::InvalidArgument("--data is required".into()))?;
            let out = args.out.clone().ok_or_else(|| Error::InvalidArgument("--out is required".into()))?;
            ExperimentConfig::new(data, out)
        }
    };
    if let Some(v) = args.data {
        config.data = v;
    }
    if let Some(v) = args.out {
        config.out = v;
    }
    if let Some(v) = args.loss {
        config.loss = v;
    }
    if let Some(v) = args.lambda {
        config.lambdas = v;
    }
    if let Some(v) = args.solver {
        config.solvers = v;
    }
    if let Some(v) = args.m {
        config.m = v;
    }
    if let Some(v) = args.passes {
        config.passes = v;
    }
    if let Some(v) = args.seeds {
        config.seeds = v;
    }
    if let Some(v) = args.seed_base {
        config.seed_base = v;
    }
    if let Some(v) = args.stride {
        config.stride = v;
    }
    if let Some(v) = args.dim {
        config.dim = Some(v);
    }
    if let Some(v) = args.newton_iters {
        config.newton_iters = v;
    }
    if let Some(v) = args.r_recompute {
        config.r_recompute = v;
    }
    config.bias |= args.bias;
    config.timing |= args.timing;
    config.validate()?;
    Ok(config)
}

fn solve(args: SolveArgs) -> Result<ExitCode, Error> {
    let config = build_config(args)?;
    let summary = experiment::run_experiment(&config)?;
    for (lambda, reference) in &summary.references {
        eprintln!("lambda={lambda:e} reference objective {reference:.12e}");
    }
    eprintln!(
        "wrote {} run traces and {} averaged traces to {}",
        summary.run_files.len(),
        summary.mean_files.len(),
        config.out.display()
    );
    if summary.newton_unconverged > 0 {
        eprintln!("warning: {} logistic dual solves hit the iteration cap", summary.newton_unconverged);
    }
    if summary.succeeded() {
        return Ok(ExitCode::SUCCESS);
    }
    for f in &summary.failures {
        eprintln!("failed: {} lambda={:e} seed={}: {}", f.solver, f.lambda, f.seed, f.error);
    }
    eprintln!("failure manifest: {}", config.out.join(experiment::FAILURE_MANIFEST).display());
    Ok(ExitCode::FAILURE)
}

fn verify(args: VerifyArgs) -> Result<ExitCode, Error> {
    let report = experiment::verify(&VerifyOptions {
        trials: args.trials,
        seed: args.seed,
        corrupt_theta: args.corrupt_theta,
        ..Default::default()
    })?;
    let mut out = std::io::stdout().lock();
    let _ = write!(out, "{}", report.summary_table());
    if report.passed() {
        let _ = writeln!(out, "all checks passed");
        return Ok(ExitCode::SUCCESS);
    }
    let _ = writeln!(out, "{} violations", report.violations());
    for line in report.counterexamples() {
        if writeln!(out, "{line}").is_err() {
            break;
        }
    }
    Ok(ExitCode::FAILURE)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Verify(args) => verify(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
