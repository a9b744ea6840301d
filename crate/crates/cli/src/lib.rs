//! Command implementations behind the `metasymnet` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use metasymnet::benchmarks::{
    self, add_noise, load_csv, realize, sample, BenchmarkEntry, Dataset, SamplingKind, SamplingSpec,
};
use metasymnet::runner::run_ordered;
use metasymnet::{
    alternating_fit, derive_seed, is_recovered, ned, r_squared, EvalPolicy, Expression, FitReport,
    Hyperparams,
};

pub const SEED_ENV: &str = "METASYMNET_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] metasymnet::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "metasymnet",
    version,
    about = "Symbolic regression with softmax-gated operator trees"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit one dataset for one or more seeds.
    Fit(FitArgs),
    /// Fit registry benchmarks repeatedly and score them against ground truth.
    Benchmark(SuiteArgs),
    /// Fit noise-injected benchmarks at several noise levels.
    NoiseSweep(SweepArgs),
    /// Print registry names, one per line.
    List,
}

#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// `key=value` file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Hyperparameter override, e.g. `--set alpha=0.05`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Train with lambda = 0.
    #[arg(long)]
    pub no_entropy: bool,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Include extraction decisions in JSON output.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, conflicts_with = "data")]
    pub benchmark: Option<String>,
    /// CSV with header `x1,...,xk,y`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct SuiteArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Comma-separated names or globs, e.g. `Nguyen-*`.
    #[arg(long, visible_alias = "benchmark")]
    pub names: Option<String>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Master seed; every task derives its own.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub suite: SuiteArgs,
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Fit,
    Benchmark,
    NoiseSweep,
    List,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Source {
    Benchmarks(String),
    Data(PathBuf),
}

/// Fully resolved settings for one invocation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub source: Option<Source>,
    pub hyper: Hyperparams,
    pub seeds: Vec<u64>,
    pub repeats: usize,
    pub parallelism: usize,
    pub entropy_loss: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub trace: bool,
    pub levels: Vec<f64>,
}

pub const DEFAULT_REPEATS: usize = 10;

pub fn default_levels() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 100.0).collect()
}

fn default_parallelism() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_kv(line: &str) -> CliResult<(String, String)> {
    line.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| CliError::Usage(format!("expected key=value, found `{line}`")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<Vec<T>> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("`{key}`: cannot parse `{s}`")))
        })
        .collect()
}

fn parse_one<T: std::str::FromStr>(key: &str, v: &str) -> CliResult<T> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("`{key}`: cannot parse `{v}`")))
}

/// Settings read from a config file before flags are applied.
#[derive(Default)]
struct FileSettings {
    hyper: Vec<(String, String)>,
    names: Option<String>,
    data: Option<PathBuf>,
    seeds: Option<Vec<u64>>,
    repeats: Option<usize>,
    parallelism: Option<usize>,
    levels: Option<Vec<f64>>,
    format: Option<Format>,
    output: Option<PathBuf>,
    entropy_loss: Option<bool>,
    trace: Option<bool>,
}

fn read_config_file(path: &Path) -> CliResult<FileSettings> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = FileSettings::default();
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = parse_kv(line)?;
        match k.as_str() {
            "names" | "benchmark" => out.names = Some(v),
            "data" => out.data = Some(PathBuf::from(v)),
            "seed" | "seeds" => out.seeds = Some(parse_list(&k, &v)?),
            "repeats" => out.repeats = Some(parse_one(&k, &v)?),
            "parallelism" => out.parallelism = Some(parse_one(&k, &v)?),
            "levels" => out.levels = Some(parse_list(&k, &v)?),
            "format" => {
                out.format = Some(match v.as_str() {
                    "json" => Format::Json,
                    "csv" => Format::Csv,
                    other => return Err(CliError::Usage(format!("unknown format `{other}`"))),
                })
            }
            "output" => out.output = Some(PathBuf::from(v)),
            "entropy_loss" => out.entropy_loss = Some(parse_one(&k, &v)?),
            "trace" => out.trace = Some(parse_one(&k, &v)?),
            _ => out.hyper.push((k, v)),
        }
    }
    Ok(out)
}

fn env_seed() -> CliResult<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => parse_one(SEED_ENV, &v).map(Some),
        Err(_) => Ok(None),
    }
}

fn resolve_common(
    common: &CommonArgs,
    command: CommandKind,
) -> CliResult<(RunConfig, FileSettings)> {
    let file = match &common.config {
        Some(p) => read_config_file(p)?,
        None => FileSettings::default(),
    };
    let mut hyper = Hyperparams::default();
    for (k, v) in &file.hyper {
        hyper.set(k, v)?;
    }
    for kv in &common.set {
        let (k, v) = parse_kv(kv)?;
        hyper.set(&k, &v)?;
    }
    let entropy_loss = !common.no_entropy && file.entropy_loss.unwrap_or(true);
    if !entropy_loss {
        hyper.lambda = 0.0;
    }
    hyper.validate()?;
    let parallelism = common
        .parallelism
        .or(file.parallelism)
        .unwrap_or_else(default_parallelism);
    if parallelism < 1 {
        return Err(CliError::Usage("--parallelism must be >= 1".into()));
    }
    let cfg = RunConfig {
        command,
        source: None,
        hyper,
        seeds: Vec::new(),
        repeats: DEFAULT_REPEATS,
        parallelism,
        entropy_loss,
        output: common.output.clone().or(file.output.clone()),
        format: common.format.or(file.format).unwrap_or_default(),
        trace: common.trace || file.trace.unwrap_or(false),
        levels: Vec::new(),
    };
    Ok((cfg, file))
}

impl RunConfig {
    pub fn from_fit(args: &FitArgs) -> CliResult<Self> {
        let (mut cfg, file) = resolve_common(&args.common, CommandKind::Fit)?;
        cfg.source = match (&args.benchmark, &args.data) {
            (Some(b), _) => Some(Source::Benchmarks(b.clone())),
            (None, Some(d)) => Some(Source::Data(d.clone())),
            (None, None) => match (file.names, file.data) {
                (Some(b), _) => Some(Source::Benchmarks(b)),
                (None, Some(d)) => Some(Source::Data(d)),
                (None, None) => {
                    return Err(CliError::Usage("fit needs --benchmark or --data".into()))
                }
            },
        };
        cfg.seeds = match (&args.seeds, args.seed) {
            (Some(s), _) => s.clone(),
            (None, Some(s)) => vec![s],
            (None, None) => match file.seeds {
                Some(s) => s,
                None => vec![env_seed()?.unwrap_or(0)],
            },
        };
        if cfg.seeds.is_empty() {
            return Err(CliError::Usage("no seeds given".into()));
        }
        Ok(cfg)
    }

    pub fn from_suite(args: &SuiteArgs, command: CommandKind) -> CliResult<Self> {
        let (mut cfg, file) = resolve_common(&args.common, command)?;
        let names = args
            .names
            .clone()
            .or(file.names)
            .ok_or_else(|| CliError::Usage("--names is required".into()))?;
        cfg.source = Some(Source::Benchmarks(names));
        cfg.repeats = args.repeats.or(file.repeats).unwrap_or(DEFAULT_REPEATS);
        if cfg.repeats < 1 {
            return Err(CliError::Usage("--repeats must be >= 1".into()));
        }
        let master = match args.seed {
            Some(s) => s,
            None => match file.seeds.as_deref() {
                Some([s, ..]) => *s,
                _ => env_seed()?.unwrap_or(0),
            },
        };
        cfg.seeds = vec![master];
        cfg.levels = file.levels.unwrap_or_else(default_levels);
        Ok(cfg)
    }

    pub fn from_sweep(args: &SweepArgs) -> CliResult<Self> {
        let mut cfg = RunConfig::from_suite(&args.suite, CommandKind::NoiseSweep)?;
        if let Some(levels) = &args.levels {
            cfg.levels = levels.clone();
        }
        if cfg.levels.is_empty() || cfg.levels.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
            return Err(CliError::Usage(
                "--levels must be non-negative numbers".into(),
            ));
        }
        Ok(cfg)
    }

    fn master_seed(&self) -> u64 {
        self.seeds.first().copied().unwrap_or(0)
    }

    fn pattern(&self) -> CliResult<&str> {
        match &self.source {
            Some(Source::Benchmarks(p)) => Ok(p),
            _ => Err(CliError::Usage("benchmark names required".into())),
        }
    }
}

/// Output of a command: the text to emit and the process exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub exit_code: i32,
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(&RunConfig::from_fit(a)?),
        Command::Benchmark(a) => cmd_benchmark(&RunConfig::from_suite(a, CommandKind::Benchmark)?),
        Command::NoiseSweep(a) => cmd_noise_sweep(&RunConfig::from_sweep(a)?),
        Command::List => Ok(cmd_list()),
    }
}

/// Writes to `--output` when given, stdout text otherwise.
pub fn emit(cfg_output: Option<&Path>, outcome: &Outcome) -> CliResult<String> {
    match cfg_output {
        Some(p) => {
            fs::write(p, &outcome.text)?;
            Ok(String::new())
        }
        None => Ok(outcome.text.clone()),
    }
}

pub fn output_path(cli: &Cli) -> Option<PathBuf> {
    let common = match &cli.command {
        Command::Fit(a) => &a.common,
        Command::Benchmark(a) => &a.common,
        Command::NoiseSweep(a) => &a.suite.common,
        Command::List => return None,
    };
    if common.output.is_some() {
        return common.output.clone();
    }
    common
        .config
        .as_deref()
        .and_then(|p| read_config_file(p).ok())
        .and_then(|f| f.output)
}

pub fn cmd_list() -> Outcome {
    let mut text = String::new();
    for name in benchmarks::registry_names() {
        text.push_str(name);
        text.push('\n');
    }
    Outcome { text, exit_code: 0 }
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Evaluation grid used to score against the clean ground truth: a fresh
/// uniform draw over the benchmark's range, at least 100 points.
pub fn holdout_spec(entry: &BenchmarkEntry, seed: u64) -> SamplingSpec {
    SamplingSpec {
        kind: SamplingKind::Uniform,
        low: entry.spec.low,
        high: entry.spec.high,
        count: entry.spec.count.clamp(100, 10_000),
        seed,
    }
}

/// R² of `expr` against the ground truth of `entry` on a fresh in-domain sample.
pub fn holdout_r2(expr: &Expression, entry: &BenchmarkEntry, seed: u64) -> f64 {
    let policy = EvalPolicy::default();
    let x = sample(&holdout_spec(entry, seed), entry.k);
    let (Ok(y), Ok(yhat)) = (
        entry.expression.eval_batch(&x, &policy),
        expr.eval_batch(&x, &policy),
    ) else {
        return f64::NEG_INFINITY;
    };
    r_squared(&y, &yhat).map_or(f64::NEG_INFINITY, |r| r.score_or(y == yhat))
}

// ---- fit ----

#[derive(Clone, Debug, Serialize)]
pub struct FitAggregate {
    pub runs: usize,
    pub converged: usize,
    pub mean_r2: f64,
    pub std_r2: f64,
    pub mean_node_count: f64,
    pub std_node_count: f64,
    pub mean_evaluation_count: f64,
    pub std_evaluation_count: f64,
    pub mean_wall_time_s: f64,
    pub std_wall_time_s: f64,
}

impl FitAggregate {
    pub fn from_reports(reports: &[FitReport]) -> Self {
        let r2: Vec<f64> = reports.iter().map(|r| r.r2).collect();
        let nodes: Vec<f64> = reports.iter().map(|r| r.node_count as f64).collect();
        let evals: Vec<f64> = reports.iter().map(|r| r.evaluation_count as f64).collect();
        let wall: Vec<f64> = reports.iter().map(|r| r.wall_time_s).collect();
        FitAggregate {
            runs: reports.len(),
            converged: reports.iter().filter(|r| r.converged).count(),
            mean_r2: mean(&r2),
            std_r2: std_dev(&r2),
            mean_node_count: mean(&nodes),
            std_node_count: std_dev(&nodes),
            mean_evaluation_count: mean(&evals),
            std_evaluation_count: std_dev(&evals),
            mean_wall_time_s: mean(&wall),
            std_wall_time_s: std_dev(&wall),
        }
    }
}

#[derive(Serialize)]
struct FitDocument<'a> {
    source: &'a str,
    reports: &'a [FitReport],
    aggregate: FitAggregate,
}

fn fit_dataset(cfg: &RunConfig, seed: u64) -> CliResult<(String, Dataset)> {
    match cfg.source.as_ref() {
        Some(Source::Data(p)) => {
            let ds = load_csv(p)?;
            Ok((ds.name.clone(), ds))
        }
        Some(Source::Benchmarks(name)) => {
            let entry = benchmarks::get_benchmark(name)?;
            Ok((entry.name.to_string(), realize(entry, derive_seed(seed, 0))))
        }
        None => Err(CliError::Usage("fit needs --benchmark or --data".into())),
    }
}

pub fn cmd_fit(cfg: &RunConfig) -> CliResult<Outcome> {
    // resolve the source once up front so usage errors surface before any work
    let (source, _) = fit_dataset(cfg, cfg.seeds[0])?;
    let results = run_ordered(
        &cfg.seeds,
        cfg.parallelism,
        |&seed| -> CliResult<FitReport> {
            let (_, data) = fit_dataset(cfg, seed)?;
            let mut report = alternating_fit(&data, &cfg.hyper, seed)?;
            if !cfg.trace {
                report.extraction_trace = None;
            }
            Ok(report)
        },
    )?;
    let reports = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let aggregate = FitAggregate::from_reports(&reports);
    let exit_code = if aggregate.converged > 0 { 0 } else { 2 };
    let text = match cfg.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&FitDocument {
                source: &source,
                reports: &reports,
                aggregate,
            })?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            s.push_str(FitReport::CSV_HEADER);
            s.push('\n');
            for r in &reports {
                s.push_str(&r.csv_row());
                s.push('\n');
            }
            s
        }
    };
    Ok(Outcome { text, exit_code })
}

// ---- benchmark ----

/// One benchmark run. Metric cells are empty when the run failed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub benchmark: String,
    pub group: String,
    pub repeat: usize,
    pub seed: u64,
    pub status: String,
    pub r2: Option<f64>,
    pub train_r2: Option<f64>,
    pub mse: Option<f64>,
    pub ned: Option<f64>,
    pub node_count: Option<usize>,
    pub evaluation_count: Option<usize>,
    pub recovered: Option<bool>,
    pub converged: Option<bool>,
    pub final_max_selection: Option<f64>,
    pub expression: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub scope: String,
    pub name: String,
    pub runs: usize,
    pub failures: usize,
    pub mean_r2: f64,
    pub mean_node_count: f64,
    pub recovery_rate: f64,
    pub mean_evaluation_count: f64,
    pub mean_final_max_selection: f64,
}

struct SuiteTask {
    entry: &'static BenchmarkEntry,
    repeat: usize,
    seed: u64,
}

fn suite_tasks(cfg: &RunConfig) -> CliResult<Vec<SuiteTask>> {
    let entries = benchmarks::select(cfg.pattern()?)?;
    let master = cfg.master_seed();
    let mut tasks = Vec::new();
    for entry in entries {
        for repeat in 0..cfg.repeats {
            let index = tasks.len() as u64;
            tasks.push(SuiteTask {
                entry,
                repeat,
                seed: derive_seed(master, index),
            });
        }
    }
    Ok(tasks)
}

fn failed_row(task: &SuiteTask, err: impl std::fmt::Display) -> RunRow {
    RunRow {
        benchmark: task.entry.name.to_string(),
        group: task.entry.group.to_string(),
        repeat: task.repeat,
        seed: task.seed,
        status: format!("error: {err}"),
        r2: None,
        train_r2: None,
        mse: None,
        ned: None,
        node_count: None,
        evaluation_count: None,
        recovered: None,
        converged: None,
        final_max_selection: None,
        expression: None,
    }
}

fn run_suite_task(task: &SuiteTask, hyper: &Hyperparams) -> RunRow {
    let entry = task.entry;
    let data = realize(entry, derive_seed(task.seed, 0));
    let report = match alternating_fit(&data, hyper, derive_seed(task.seed, 1)) {
        Ok(r) => r,
        Err(e) => return failed_row(task, e),
    };
    let policy = EvalPolicy::default();
    let holdout = holdout_spec(entry, derive_seed(task.seed, 2));
    let x = sample(&holdout, entry.k);
    let (y, yhat) = match (
        entry.expression.eval_batch(&x, &policy),
        report.expression.eval_batch(&x, &policy),
    ) {
        (Ok(y), Ok(yh)) => (y, yh),
        (Err(e), _) | (_, Err(e)) => return failed_row(task, e),
    };
    let r2 = r_squared(&y, &yhat).map_or(f64::NEG_INFINITY, |r| r.score_or(y == yhat));
    let mse = y
        .iter()
        .zip(&yhat)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / y.len() as f64;
    RunRow {
        benchmark: entry.name.to_string(),
        group: entry.group.to_string(),
        repeat: task.repeat,
        seed: task.seed,
        status: "ok".into(),
        r2: Some(r2),
        train_r2: Some(report.r2),
        mse: Some(mse),
        ned: Some(ned(&report.expression, &entry.expression)),
        node_count: Some(report.node_count),
        evaluation_count: Some(report.evaluation_count),
        recovered: Some(is_recovered(
            &report.expression,
            &entry.expression,
            &holdout,
            &policy,
        )),
        converged: Some(report.converged),
        final_max_selection: Some(report.final_max_selection),
        expression: Some(report.expression.to_prefix()),
    }
}

fn aggregate_rows(scope: &str, name: &str, rows: &[&RunRow]) -> AggregateRow {
    let ok: Vec<&&RunRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let pick = |f: &dyn Fn(&RunRow) -> f64| mean(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    AggregateRow {
        scope: scope.into(),
        name: name.into(),
        runs: rows.len(),
        failures: rows.len() - ok.len(),
        mean_r2: pick(&|r| r.r2.unwrap_or(f64::NAN)),
        mean_node_count: pick(&|r| r.node_count.unwrap_or(0) as f64),
        recovery_rate: pick(&|r| f64::from(u8::from(r.recovered.unwrap_or(false)))),
        mean_evaluation_count: pick(&|r| r.evaluation_count.unwrap_or(0) as f64),
        mean_final_max_selection: pick(&|r| r.final_max_selection.unwrap_or(f64::NAN)),
    }
}

/// Per-benchmark then per-group aggregates, in first-seen order.
pub fn aggregate_suite(rows: &[RunRow]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    let mut seen: Vec<&str> = Vec::new();
    for r in rows {
        if !seen.contains(&r.benchmark.as_str()) {
            seen.push(&r.benchmark);
        }
    }
    for name in &seen {
        let sel: Vec<&RunRow> = rows.iter().filter(|r| r.benchmark == *name).collect();
        out.push(aggregate_rows("benchmark", name, &sel));
    }
    let mut groups: Vec<&str> = Vec::new();
    for r in rows {
        if !groups.contains(&r.group.as_str()) {
            groups.push(&r.group);
        }
    }
    for g in &groups {
        let sel: Vec<&RunRow> = rows.iter().filter(|r| r.group == *g).collect();
        out.push(aggregate_rows("group", g, &sel));
    }
    out
}

/// Runs every (benchmark, repeat) task of the suite.
pub fn benchmark_rows(cfg: &RunConfig) -> CliResult<Vec<RunRow>> {
    let tasks = suite_tasks(cfg)?;
    run_ordered(&tasks, cfg.parallelism, |t| run_suite_task(t, &cfg.hyper)).map_err(Into::into)
}

#[derive(Serialize)]
struct SuiteDocument<'a, R, A> {
    runs: &'a [R],
    aggregate: &'a [A],
}

fn csv_table<T: Serialize>(rows: &[T], header: &[&str]) -> CliResult<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub const RUN_HEADER: [&str; 15] = [
    "benchmark",
    "group",
    "repeat",
    "seed",
    "status",
    "r2",
    "train_r2",
    "mse",
    "ned",
    "node_count",
    "evaluation_count",
    "recovered",
    "converged",
    "final_max_selection",
    "expression",
];

pub const AGGREGATE_HEADER: [&str; 9] = [
    "scope",
    "name",
    "runs",
    "failures",
    "mean_r2",
    "mean_node_count",
    "recovery_rate",
    "mean_evaluation_count",
    "mean_final_max_selection",
];

pub const SWEEP_HEADER: [&str; 12] = [
    "benchmark",
    "level",
    "repeat",
    "seed",
    "status",
    "r2",
    "train_r2",
    "node_count",
    "evaluation_count",
    "converged",
    "final_max_selection",
    "expression",
];

pub const SWEEP_AGGREGATE_HEADER: [&str; 7] = [
    "benchmark",
    "level",
    "runs",
    "failures",
    "mean_r2",
    "std_r2",
    "mean_node_count",
];

fn render<R: Serialize, A: Serialize>(
    format: Format,
    runs: &[R],
    run_header: &[&str],
    aggregate: &[A],
    aggregate_header: &[&str],
) -> CliResult<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&SuiteDocument { runs, aggregate })?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut s = csv_table(runs, run_header)?;
            s.push('\n');
            s.push_str(&csv_table(aggregate, aggregate_header)?);
            Ok(s)
        }
    }
}

pub fn cmd_benchmark(cfg: &RunConfig) -> CliResult<Outcome> {
    let rows = benchmark_rows(cfg)?;
    let agg = aggregate_suite(&rows);
    let text = render(cfg.format, &rows, &RUN_HEADER, &agg, &AGGREGATE_HEADER)?;
    Ok(Outcome { text, exit_code: 0 })
}

// ---- noise sweep ----

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub benchmark: String,
    pub level: f64,
    pub repeat: usize,
    pub seed: u64,
    pub status: String,
    /// Against the clean ground truth on a fresh sample.
    pub r2: Option<f64>,
    /// Against the noisy training targets.
    pub train_r2: Option<f64>,
    pub node_count: Option<usize>,
    pub evaluation_count: Option<usize>,
    pub converged: Option<bool>,
    pub final_max_selection: Option<f64>,
    pub expression: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregateRow {
    pub benchmark: String,
    pub level: f64,
    pub runs: usize,
    pub failures: usize,
    pub mean_r2: f64,
    pub std_r2: f64,
    pub mean_node_count: f64,
}

struct SweepTask {
    entry: &'static BenchmarkEntry,
    level: f64,
    level_index: usize,
    repeat: usize,
    /// Shared by every level of one (benchmark, repeat) pair, so levels are
    /// compared on the same inputs.
    base_seed: u64,
}

pub fn sweep_rows(cfg: &RunConfig) -> CliResult<Vec<SweepRow>> {
    let entries = benchmarks::select(cfg.pattern()?)?;
    let master = cfg.master_seed();
    let mut tasks = Vec::new();
    for (b, entry) in entries.iter().enumerate() {
        for (li, &level) in cfg.levels.iter().enumerate() {
            for repeat in 0..cfg.repeats {
                tasks.push(SweepTask {
                    entry,
                    level,
                    level_index: li,
                    repeat,
                    base_seed: derive_seed(master, (b * cfg.repeats + repeat) as u64),
                });
            }
        }
    }
    run_ordered(&tasks, cfg.parallelism, |t| run_sweep_task(t, &cfg.hyper)).map_err(Into::into)
}

fn run_sweep_task(t: &SweepTask, hyper: &Hyperparams) -> SweepRow {
    let clean = realize(t.entry, derive_seed(t.base_seed, 0));
    let noisy_y = add_noise(
        &clean.y,
        t.level,
        derive_seed(t.base_seed, 100 + t.level_index as u64),
    );
    let data = clean.with_targets(noisy_y);
    let mut row = SweepRow {
        benchmark: t.entry.name.to_string(),
        level: t.level,
        repeat: t.repeat,
        seed: t.base_seed,
        status: "ok".into(),
        r2: None,
        train_r2: None,
        node_count: None,
        evaluation_count: None,
        converged: None,
        final_max_selection: None,
        expression: None,
    };
    match alternating_fit(&data, hyper, derive_seed(t.base_seed, 1)) {
        Ok(report) => {
            row.r2 = Some(holdout_r2(
                &report.expression,
                t.entry,
                derive_seed(t.base_seed, 2),
            ));
            row.train_r2 = Some(report.r2);
            row.node_count = Some(report.node_count);
            row.evaluation_count = Some(report.evaluation_count);
            row.converged = Some(report.converged);
            row.final_max_selection = Some(report.final_max_selection);
            row.expression = Some(report.expression.to_prefix());
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

pub fn aggregate_sweep(rows: &[SweepRow], levels: &[f64]) -> Vec<SweepAggregateRow> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.benchmark.as_str()) {
            names.push(&r.benchmark);
        }
    }
    let mut out = Vec::new();
    for name in names {
        for &level in levels {
            let sel: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.benchmark == name && r.level == level)
                .collect();
            let r2: Vec<f64> = sel.iter().filter_map(|r| r.r2).collect();
            let nodes: Vec<f64> = sel
                .iter()
                .filter_map(|r| r.node_count.map(|n| n as f64))
                .collect();
            out.push(SweepAggregateRow {
                benchmark: name.to_string(),
                level,
                runs: sel.len(),
                failures: sel.len() - r2.len(),
                mean_r2: mean(&r2),
                std_r2: std_dev(&r2),
                mean_node_count: mean(&nodes),
            });
        }
    }
    out
}

pub fn cmd_noise_sweep(cfg: &RunConfig) -> CliResult<Outcome> {
    let rows = sweep_rows(cfg)?;
    let agg = aggregate_sweep(&rows, &cfg.levels);
    let text = render(
        cfg.format,
        &rows,
        &SWEEP_HEADER,
        &agg,
        &SWEEP_AGGREGATE_HEADER,
    )?;
    Ok(Outcome { text, exit_code: 0 })
}

// ---- reading emitted CSV back ----

/// Splits emitted CSV text into its blank-line separated tables.
pub fn split_tables(text: &str) -> Vec<String> {
    let mut tables = Vec::new();
    let mut cur = String::new();
    for line in text.lines() {
        if line.is_empty() {
            if !cur.is_empty() {
                tables.push(std::mem::take(&mut cur));
            }
        } else {
            let _ = writeln!(cur, "{line}");
        }
    }
    if !cur.is_empty() {
        tables.push(cur);
    }
    tables
}

/// Parses one emitted table, checking the header matches `T`'s schema exactly.
pub fn parse_table<T: for<'de> Deserialize<'de>>(
    table: &str,
    header: &[&str],
) -> CliResult<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(table.as_bytes());
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(CliError::Usage(format!(
            "unexpected header `{}`",
            found.join(",")
        )));
    }
    rdr.deserialize()
        .map(|r| r.map_err(CliError::from))
        .collect()
}
