//! Experiment runner: a grid of (solver, lambda, seed) runs executed in
//! parallel, with one CSV trace per run and one seed-averaged CSV per
//! (solver, lambda).

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, ContractionReport, LemmaReport, BoundDiagnostic};
use crate::blockmat::BlockMatrix;
use crate::data::{self, Dataset};
use crate::error::{Error, Result};
use crate::losses::{LossKind, SaddleProblem, DEFAULT_NEWTON_ITERS};
use crate::solver::{self, SolverConfig, TraceRecord, Variant};

pub const CSV_HEADER: [&str; 7] = [
    "pass",
    "objective",
    "suboptimality",
    "elapsed_ms",
    "seed",
    "solver",
    "lambda",
];
pub const THREADS_ENV: &str = "SEPSADDLE_THREADS";
pub const FAILURE_MANIFEST: &str = "failures.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DataSource {
    Synthetic { n: usize, d: usize, seed: u64 },
    File(PathBuf),
}

impl FromStr for DataSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let Some(params) = s.strip_prefix("synthetic:") else {
            return Ok(DataSource::File(PathBuf::from(s)));
        };
        let (mut n, mut d, mut seed) = (None, None, 0);
        for kv in params.split(',').filter(|p| !p.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("expected key=value, got '{kv}'")))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<u64>()
                    .map_err(|e| Error::invalid(format!("bad value for '{k}': {e}")))
            };
            match k.trim() {
                "n" => n = Some(parse(v)? as usize),
                "d" => d = Some(parse(v)? as usize),
                "seed" => seed = parse(v)?,
                other => return Err(Error::invalid(format!("unknown synthetic parameter '{other}'"))),
            }
        }
        match (n, d) {
            (Some(n), Some(d)) => Ok(DataSource::Synthetic { n, d, seed }),
            _ => Err(Error::invalid("synthetic data needs both n and d")),
        }
    }
}

impl TryFrom<String> for DataSource {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DataSource> for String {
    fn from(d: DataSource) -> String {
        d.to_string()
    }
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataSource::Synthetic { n, d, seed } => write!(f, "synthetic:n={n},d={d},seed={seed}"),
            DataSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl DataSource {
    pub fn load(&self, dim: Option<usize>) -> Result<Dataset> {
        match self {
            DataSource::Synthetic { n, d, seed } => data::generate_synthetic(*n, *d, *seed),
            DataSource::File(p) => data::load_libsvm(p, dim),
        }
    }
}

/// Everything needed to reproduce one experiment. Field names double as the
/// keys of the TOML config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default = "default_loss")]
    pub loss: LossKind,
    #[serde(alias = "lambda")]
    pub lambdas: Vec<f64>,
    #[serde(alias = "solver")]
    pub solvers: Vec<Variant>,
    #[serde(default = "default_m")]
    pub m: usize,
    pub passes: f64,
    #[serde(default = "default_seeds")]
    pub seeds: u64,
    #[serde(default)]
    pub seed_base: u64,
    #[serde(default = "default_stride")]
    pub stride: f64,
    pub out: PathBuf,
    /// Pins the feature dimension of LIBSVM input.
    #[serde(default)]
    pub dim: Option<usize>,
    /// Appends a constant feature to every sample.
    #[serde(default)]
    pub bias: bool,
    /// Records wall-clock time; traces are then no longer reproducible.
    #[serde(default)]
    pub timing: bool,
    #[serde(default = "default_newton")]
    pub newton_iters: usize,
    #[serde(default = "default_recompute")]
    pub r_recompute: u64,
}

fn default_loss() -> LossKind {
    LossKind::Quadratic
}
fn default_m() -> usize {
    1
}
fn default_seeds() -> u64 {
    1
}
fn default_stride() -> f64 {
    1.0
}
fn default_newton() -> usize {
    DEFAULT_NEWTON_ITERS
}
fn default_recompute() -> u64 {
    SolverConfig::default().r_recompute_interval
}

impl ExperimentConfig {
    pub fn new(data: DataSource, out: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            data,
            loss: default_loss(),
            lambdas: vec![1e-4],
            solvers: vec![Variant::AdaSpdc],
            m: default_m(),
            passes: 10.0,
            seeds: default_seeds(),
            seed_base: 0,
            stride: default_stride(),
            out: out.into(),
            dim: None,
            bias: false,
            timing: false,
            newton_iters: default_newton(),
            r_recompute: default_recompute(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::invalid(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.solvers.is_empty() {
            return Err(Error::invalid("solver list is empty"));
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::invalid("every lambda must be finite and > 0"));
        }
        if self.seeds == 0 {
            return Err(Error::invalid("need at least one seed"));
        }
        if !(self.passes >= 0.0) || !self.passes.is_finite() {
            return Err(Error::invalid("passes must be finite and non-negative"));
        }
        if !(self.stride > 0.0) || !self.stride.is_finite() {
            return Err(Error::invalid("stride must be positive"));
        }
        if self.m == 0 {
            return Err(Error::invalid("m must be at least 1"));
        }
        Ok(())
    }

    fn solver_config(&self, variant: Variant, seed: u64) -> SolverConfig {
        SolverConfig {
            variant,
            m: self.m,
            max_passes: self.passes,
            seed,
            r_recompute_interval: self.r_recompute,
            newton_iters: self.newton_iters,
            trace_stride: self.stride,
            record_time: self.timing,
        }
    }
}

/// `1e-4` rather than `0.0001`, so file names stay short and unambiguous.
pub fn format_lambda(lambda: f64) -> String {
    format!("{lambda:e}")
}

pub fn run_file_name(variant: Variant, lambda: f64, seed: u64) -> String {
    format!("{variant}_lambda{}_seed{seed}.csv", format_lambda(lambda))
}

pub fn mean_file_name(variant: Variant, lambda: f64) -> String {
    format!("{variant}_lambda{}_mean.csv", format_lambda(lambda))
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    pass: f64,
    objective: f64,
    suboptimality: Option<f64>,
    elapsed_ms: f64,
    seed: String,
}

fn csv_bytes(rows: &[Row], variant: Variant, lambda: f64) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let map = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(map)?;
    let (solver, lambda) = (variant.to_string(), format_lambda(lambda));
    for r in rows {
        w.write_record([
            r.pass.to_string(),
            r.objective.to_string(),
            r.suboptimality.map(|s| s.max(0.0).to_string()).unwrap_or_default(),
            r.elapsed_ms.to_string(),
            r.seed.clone(),
            solver.clone(),
            lambda.clone(),
        ])
        .map_err(map)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn rows_of(trace: &[TraceRecord]) -> Vec<Row> {
    trace
        .iter()
        .map(|r| Row {
            pass: r.pass,
            objective: r.objective,
            suboptimality: r.suboptimality,
            elapsed_ms: r.elapsed_ms,
            seed: r.seed.to_string(),
        })
        .collect()
}

/// One averaged row: pass, mean suboptimality, mean primal-dual gap, mean elapsed ms.
pub type MeanRow = (f64, f64, Option<f64>, f64);

/// Seed average at matching pass indices. Fails if the traces do not share
/// the same pass grid.
pub fn average_traces(traces: &[&[TraceRecord]]) -> Result<Vec<MeanRow>> {
    let first = traces.first().ok_or_else(|| Error::invalid("nothing to average"))?;
    for t in traces {
        let same = t.len() == first.len() && t.iter().zip(first.iter()).all(|(u, v)| u.pass == v.pass);
        if !same {
            return Err(Error::invalid("traces have different pass grids"));
        }
    }
    let k = traces.len() as f64;
    Ok((0..first.len())
        .map(|j| {
            let mean = |f: &dyn Fn(&TraceRecord) -> f64| traces.iter().map(|t| f(&t[j])).sum::<f64>() / k;
            let sub = first[j]
                .suboptimality
                .map(|_| mean(&|r| r.suboptimality.unwrap_or(f64::NAN).max(0.0)));
            (first[j].pass, mean(&|r| r.objective), sub, mean(&|r| r.elapsed_ms))
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunFailureRecord {
    pub solver: String,
    pub lambda: f64,
    pub seed: u64,
    pub error: String,
    pub records_written: usize,
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentSummary {
    pub run_files: Vec<PathBuf>,
    pub mean_files: Vec<PathBuf>,
    pub failures: Vec<RunFailureRecord>,
    /// Reference optimum per lambda, in config order.
    pub references: Vec<(f64, f64)>,
    pub newton_unconverged: u64,
}

impl ExperimentSummary {
    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Reference optimum: closed form for ridge when it fits, otherwise the best
/// objective of a long AdaSPDC run.
pub fn reference_objective(problem: &SaddleProblem, a: &BlockMatrix, config: &ExperimentConfig) -> Result<f64> {
    if problem.loss == LossKind::Quadratic && a.rows() <= analysis::MAX_RIDGE_DIM {
        return Ok(analysis::ridge_exact_solution(a, &problem.labels, problem.lambda)?.objective);
    }
    let m = config.m.min(a.num_blocks());
    analysis::approximate_optimum(problem, a, m, config.passes.max(1.0), config.seed_base)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::invalid(format!("{THREADS_ENV} must be positive")));
        }
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::invalid(e.to_string()))
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    let ds = config.data.load(config.dim)?;
    if config.bias {
        data::add_bias(&ds)
    } else {
        Ok(ds)
    }
}

/// Runs the whole grid and writes traces into `config.out`. Run failures do
/// not abort the others; they are listed in the summary and in
/// `failures.json`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    let dataset = load_dataset(config)?;
    let pool = thread_pool()?;
    fs::create_dir_all(&config.out)?;

    let problems = config
        .lambdas
        .iter()
        .map(|&l| SaddleProblem::new(config.loss, dataset.labels.clone(), l))
        .collect::<Result<Vec<_>>>()?;
    let a = &dataset.matrix;
    let references = pool.install(|| {
        problems
            .par_iter()
            .map(|p| reference_objective(p, a, config))
            .collect::<Result<Vec<f64>>>()
    })?;

    let jobs: Vec<(Variant, usize, u64)> = config
        .solvers
        .iter()
        .flat_map(|&v| {
            (0..config.lambdas.len())
                .flat_map(move |li| (0..config.seeds).map(move |s| (v, li, s)))
        })
        .map(|(v, li, s)| (v, li, config.seed_base + s))
        .collect();
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|&(v, li, seed)| {
                solver::run(&problems[li], a, &config.solver_config(v, seed), Some(references[li]))
            })
            .collect()
    });

    let mut summary = ExperimentSummary {
        references: config.lambdas.iter().copied().zip(references.iter().copied()).collect(),
        ..Default::default()
    };
    let mut traces: Vec<Option<Vec<TraceRecord>>> = Vec::with_capacity(jobs.len());
    for (&(v, li, seed), result) in jobs.iter().zip(results) {
        let lambda = config.lambdas[li];
        let path = config.out.join(run_file_name(v, lambda, seed));
        let trace = match result {
            Ok(out) => {
                summary.newton_unconverged += out.newton_unconverged;
                write_atomic(&path, &csv_bytes(&rows_of(&out.trace), v, lambda)?)?;
                Some(out.trace)
            }
            Err(fail) => {
                write_atomic(&path, &csv_bytes(&rows_of(&fail.trace), v, lambda)?)?;
                summary.failures.push(RunFailureRecord {
                    solver: v.to_string(),
                    lambda,
                    seed,
                    error: fail.error.to_string(),
                    records_written: fail.trace.len(),
                });
                None
            }
        };
        summary.run_files.push(path);
        traces.push(trace);
    }

    let per_group = config.seeds as usize;
    for (g, chunk) in traces.chunks(per_group).enumerate() {
        let (v, li, _) = jobs[g * per_group];
        let Some(group) = chunk.iter().map(|t| t.as_deref()).collect::<Option<Vec<_>>>() else {
            continue;
        };
        let lambda = config.lambdas[li];
        let rows: Vec<Row> = average_traces(&group)?
            .into_iter()
            .map(|(pass, objective, suboptimality, elapsed_ms)| Row {
                pass,
                objective,
                suboptimality,
                elapsed_ms,
                seed: "mean".into(),
            })
            .collect();
        let path = config.out.join(mean_file_name(v, lambda));
        write_atomic(&path, &csv_bytes(&rows, v, lambda)?)?;
        summary.mean_files.push(path);
    }

    let manifest = config.out.join(FAILURE_MANIFEST);
    if summary.failures.is_empty() {
        if manifest.exists() {
            fs::remove_file(&manifest)?;
        }
    } else {
        let json = serde_json::to_vec_pretty(&summary.failures).map_err(|e| Error::Io(e.into()))?;
        write_atomic(&manifest, &json)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub trials: usize,
    pub seed: u64,
    pub corrupt_theta: bool,
    pub contraction_instances: usize,
    pub contraction_dim: usize,
    pub contraction_iters: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            trials: 100,
            seed: 0,
            corrupt_theta: false,
            contraction_instances: 5,
            contraction_dim: 50,
            contraction_iters: 200,
        }
    }
}

pub const CONTRACTION_LAMBDAS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Debug, Clone, Serialize)]
pub struct ContractionCase {
    pub instance: usize,
    pub lambda: f64,
    pub report: ContractionReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub lemma: LemmaReport,
    pub contraction: Vec<ContractionCase>,
    /// Expected-bound diagnostic with `m < n`; informational only.
    pub stochastic: BoundDiagnostic,
}

impl VerifyReport {
    pub fn violations(&self) -> usize {
        self.lemma.violations()
            + self
                .contraction
                .iter()
                .map(|c| c.report.violation_count())
                .sum::<usize>()
    }

    pub fn passed(&self) -> bool {
        self.violations() == 0
    }

    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("{:<28} {:>8} {:>10} {:>14}\n", "check", "trials", "violations", "worst"));
        for r in [&self.lemma.general, &self.lemma.solver] {
            s.push_str(&format!(
                "{:<28} {:>8} {:>10} {:>14.6e}\n",
                format!("psd/{}", r.rule),
                r.trials,
                r.violations,
                r.worst_min_eigenvalue
            ));
        }
        for c in &self.contraction {
            s.push_str(&format!(
                "{:<28} {:>8} {:>10} {:>14.6e}\n",
                format!("contraction/{}/lambda={:e}", c.instance, c.lambda),
                c.report.thetas.len(),
                c.report.violation_count(),
                c.report.max_excess
            ));
        }
        s.push_str(&format!(
            "{:<28} {:>8} {:>10} {:>14}\n",
            "expected-bound (m<n)",
            "-",
            "-",
            format!("{:.3e}<={:.3e}", self.stochastic.lhs, self.stochastic.rhs)
        ));
        s
    }

    /// One JSON line per counterexample or violation.
    pub fn counterexamples(&self) -> Vec<String> {
        let mut out: Vec<String> = [&self.lemma.general, &self.lemma.solver]
            .iter()
            .flat_map(|r| r.counterexamples.iter())
            .filter_map(|c| serde_json::to_string(c).ok())
            .collect();
        for c in &self.contraction {
            for v in &c.report.violations {
                let line = serde_json::json!({
                    "check": "contraction",
                    "instance": c.instance,
                    "lambda": c.lambda,
                    "violation": v,
                });
                out.push(line.to_string());
            }
        }
        out
    }
}

pub fn verify(options: &VerifyOptions) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let lemma = analysis::check_lemma1(options.trials, &mut rng, false)?;
    let dim = options.contraction_dim;
    let contraction = (0..options.contraction_instances)
        .into_par_iter()
        .map(|k| {
            let lambda = CONTRACTION_LAMBDAS[k % CONTRACTION_LAMBDAS.len()];
            let ds = data::generate_synthetic(dim, dim, options.seed + k as u64)?;
            let problem = SaddleProblem::new(LossKind::Quadratic, ds.labels, lambda)?;
            let report = analysis::check_contraction(&problem, &ds.matrix, options.contraction_iters, options.corrupt_theta)?;
            Ok(ContractionCase { instance: k, lambda, report })
        })
        .collect::<Result<Vec<_>>>()?;

    let ds = data::generate_synthetic(dim, dim, options.seed)?;
    let problem = SaddleProblem::new(LossKind::Quadratic, ds.labels, CONTRACTION_LAMBDAS[0])?;
    let stochastic = analysis::expected_bound_diagnostic(&problem, &ds.matrix, (dim / 10).max(1), 20 * dim, 20)?;
    Ok(VerifyReport {
        lemma,
        contraction,
        stochastic,
    })
}
