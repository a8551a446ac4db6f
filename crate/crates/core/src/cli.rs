//! Command-line front end.
//!
//! Exit codes: 0 success, 1 domain error (JSON on stderr), 2 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::calibration::{self, CalibrationTarget};
use crate::confidence::{
    score_all, Method, DEFAULT_COV_EPSILON, DEFAULT_LOGISTIC_LAMBDA, DEFAULT_QUALIFICATION_Q,
    DEFAULT_RIDGE_LAMBDA,
};
use crate::dataio::{self, PreprocessConfig, SynthConfig, RNG_ALGORITHM};
use crate::error::Error;
use crate::eval::{self, curve_from_values};
use crate::metrics::{MetricKind, RerankDataset};

pub const THREADS_ENV: &str = "ABSTAIN_RANK_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "abstain-rank",
    version,
    about = "Confidence estimation and abstention for rerankers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cut raw instances to k documents with at most P positives.
    Prep(PrepArgs),
    /// Fit a confidence model on a whole dataset and save it.
    Fit(FitArgs),
    /// Score every instance of a dataset with a saved model (CSV).
    Score(ScoreArgs),
    /// Split, fit and report AUC, oracle AUC, random AUC and nAUC.
    Eval(EvalArgs),
    /// Export the performance-abstention curve with oracle and random columns.
    Curve(EvalArgs),
    /// Threshold calibration error over repeated splits.
    Calibrate(CalibrateArgs),
    /// Fit on one dataset and evaluate on another.
    Transfer(TransferArgs),
    /// nAUC against reference-set size.
    Refsize(RefsizeArgs),
    /// nAUC of log and mah confidences against the qualification threshold.
    #[command(name = "sweep-q")]
    SweepQ(SweepQArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Time confidence evaluation per instance.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodName {
    Max,
    Std,
    Gap12,
    Lin,
    Log,
    Mah,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MetricName {
    Ap,
    Ndcg,
    Rr,
}

impl From<MetricName> for MetricKind {
    fn from(m: MetricName) -> Self {
        match m {
            MetricName::Ap => MetricKind::Ap,
            MetricName::Ndcg => MetricKind::Ndcg,
            MetricName::Rr => MetricKind::Rr,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct HyperArgs {
    /// Ridge penalty for `lin`.
    #[arg(long, default_value_t = DEFAULT_RIDGE_LAMBDA)]
    pub ridge_lambda: f64,
    /// L2 penalty for `log`.
    #[arg(long, default_value_t = DEFAULT_LOGISTIC_LAMBDA)]
    pub l2_lambda: f64,
    /// Qualification threshold for `log` and `mah`.
    #[arg(long, default_value_t = DEFAULT_QUALIFICATION_Q)]
    pub q: f64,
    /// Covariance regularization for `mah`.
    #[arg(long, default_value_t = DEFAULT_COV_EPSILON)]
    pub cov_eps: f64,
}

impl HyperArgs {
    fn method(&self, name: MethodName) -> Method {
        match name {
            MethodName::Max => Method::Max,
            MethodName::Std => Method::Std,
            MethodName::Gap12 => Method::Gap12,
            MethodName::Lin => Method::Linear {
                ridge_lambda: self.ridge_lambda,
            },
            MethodName::Log => Method::Logistic {
                q: self.q,
                l2_lambda: self.l2_lambda,
            },
            MethodName::Mah => Method::Mahalanobis {
                q: self.q,
                cov_epsilon: self.cov_eps,
            },
        }
    }
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overwrite an existing output file.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct PrepArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub target_k: usize,
    #[arg(long, default_value_t = 5)]
    pub max_positives: usize,
    #[arg(long)]
    pub seed: u64,
    /// Where to write the discard report (JSON list); included in the summary
    /// on stdout either way.
    #[arg(long)]
    pub discards: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodName,
    #[arg(long, value_enum, default_value = "ap")]
    pub metric: MetricName,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Dataset to split, or the reference set when `--test` is given.
    #[arg(long)]
    pub data: PathBuf,
    /// Pre-split test set; disables splitting.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: MethodName,
    #[arg(long, value_enum, default_value = "ap")]
    pub metric: MetricName,
    /// Split seed; required unless `--test` is given.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodName,
    #[arg(long, value_enum, default_value = "ap")]
    pub metric: MetricName,
    /// Target abstention rates.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.5,0.9")]
    pub targets: Vec<f64>,
    /// Target performance levels.
    #[arg(long, value_delimiter = ',')]
    pub target_perf: Vec<f64>,
    /// Number of random splits.
    #[arg(long, default_value_t = 1000)]
    pub seeds: usize,
    /// First split seed.
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct TransferArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, value_enum)]
    pub method: MethodName,
    #[arg(long, value_enum, default_value = "ap")]
    pub metric: MetricName,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct RefsizeArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "lin")]
    pub method: MethodName,
    #[arg(long, value_enum, default_value = "std")]
    pub baseline: MethodName,
    #[arg(long, value_enum, default_value = "ap")]
    pub metric: MetricName,
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[command(flatten)]
    pub hyper: HyperArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SweepQArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "ap")]
    pub metric: MetricName,
    #[arg(
        long = "q-values",
        value_delimiter = ',',
        default_value = "0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45"
    )]
    pub q_values: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub seeds: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
    #[arg(long, default_value_t = DEFAULT_LOGISTIC_LAMBDA)]
    pub l2_lambda: f64,
    #[arg(long, default_value_t = DEFAULT_COV_EPSILON)]
    pub cov_eps: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    #[arg(long)]
    pub separability: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 1)]
    pub min_positives: usize,
    #[arg(long, default_value_t = 5)]
    pub max_positives: usize,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[command(flatten)]
    pub out: OutArgs,
}

/// Failure of a command, mapped onto the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(Error),
    OutputExists(PathBuf),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) | CliError::OutputExists(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Usage(m) => json!({"error": "UsageError", "message": m}),
            CliError::Domain(e) => json!({"error": e.kind(), "message": e.to_string()}),
            CliError::OutputExists(p) => json!({
                "error": "OutputExists",
                "message": format!("{} exists; pass --force to overwrite", p.display()),
            }),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Writes `content` to `--out` (atomically, refusing to clobber without
/// `--force`) or to stdout.
fn emit(out: &OutArgs, content: &str) -> CliResult<()> {
    match &out.out {
        Some(path) => write_file(path, out.force, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| CliError::Domain(e.into()))
        }
    }
}

fn write_file(path: &Path, force: bool, content: &str) -> CliResult<()> {
    if path.exists() && !force {
        return Err(CliError::OutputExists(path.to_path_buf()));
    }
    dataio::write_atomic(path, content.as_bytes())?;
    Ok(())
}

fn to_json_text(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

fn check_ratio(ratio: f64) -> CliResult<()> {
    if ratio > 0.0 && ratio < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--ratio must lie in (0, 1), got {ratio}")))
    }
}

fn report_json(report: &eval::EvalReport) -> serde_json::Map<String, Value> {
    match serde_json::to_value(report).expect("report serializes") {
        Value::Object(map) => map,
        _ => unreachable!("reports serialize to objects"),
    }
}

/// Reference and test sets for `eval` / `curve`.
fn eval_sets(args: &EvalArgs) -> CliResult<(RerankDataset, RerankDataset, Value)> {
    check_ratio(args.ratio)?;
    let data = dataio::load_jsonl(&args.data)?;
    match &args.test {
        Some(test) => {
            let test = dataio::load_jsonl(test)?;
            let meta = json!({"split": "pre-split", "seed": args.seed});
            Ok((data, test, meta))
        }
        None => {
            let seed = args
                .seed
                .ok_or_else(|| usage("--seed is required unless --test is given"))?;
            let (r, t) = dataio::split_reference_test(&data, args.ratio, seed)?;
            let meta =
                json!({"split": "random", "seed": seed, "ratio": args.ratio, "rng": RNG_ALGORITHM});
            Ok((r, t, meta))
        }
    }
}

fn cmd_eval(args: &EvalArgs) -> CliResult<()> {
    let (reference, test, meta) = eval_sets(args)?;
    let kind = args.metric.into();
    let model = args.hyper.method(args.method).fit(&reference, kind)?;
    let report = eval::evaluate(&test, &model, kind)?;
    let mut out = report_json(&report);
    out.insert("n_reference".into(), json!(reference.len()));
    out.insert("seed".into(), meta["seed"].clone());
    out.insert("split".into(), meta);
    emit(&args.out, &to_json_text(&Value::Object(out)))
}

fn fmt_f64(v: f64) -> String {
    // shortest round-trip representation
    let mut s = String::new();
    write!(s, "{v:?}").expect("write to string");
    s
}

fn cmd_curve(args: &EvalArgs) -> CliResult<()> {
    let (reference, test, _) = eval_sets(args)?;
    let kind = args.metric.into();
    let model = args.hyper.method(args.method).fit(&reference, kind)?;
    let conf = score_all(&model, &test)?;
    let metrics = test.metric_values(kind)?;
    let mech = curve_from_values(&conf, &metrics)?;
    let oracle = curve_from_values(&metrics, &metrics)?;
    let random = mech.points()[0].performance;
    let mut csv = String::from("abstention_rate,method_perf,oracle_perf,random_perf\n");
    for (m, o) in mech.points().iter().zip(oracle.points()) {
        writeln!(
            csv,
            "{},{},{},{}",
            fmt_f64(m.abstention_rate),
            fmt_f64(m.performance),
            fmt_f64(o.performance),
            fmt_f64(random)
        )
        .expect("write to string");
    }
    emit(&args.out, &csv)
}

fn cmd_prep(args: &PrepArgs) -> CliResult<()> {
    let cfg = PreprocessConfig {
        target_k: args.target_k,
        max_positives: args.max_positives,
        rng_seed: args.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let raws = dataio::load_raw_jsonl(&args.input)?;
    let pre = dataio::preprocess_raw(&raws, &cfg)?;
    let discards = serde_json::to_value(&pre.discards).expect("discards serialize");
    if let Some(path) = &args.discards {
        write_file(path, args.out.force, &to_json_text(&discards))?;
    }
    let kept = pre.instances.len();
    let ds = pre.into_dataset()?;
    let summary = json!({
        "kept": kept,
        "discarded": discards,
        "target_k": args.target_k,
        "max_positives": args.max_positives,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
    });
    match &args.out.out {
        Some(path) => {
            write_file(path, args.out.force, &dataio::dataset_to_jsonl(&ds))?;
            emit(
                &OutArgs {
                    out: None,
                    force: false,
                },
                &to_json_text(&summary),
            )
        }
        None => emit(&args.out, &dataio::dataset_to_jsonl(&ds)),
    }
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let data = dataio::load_jsonl(&args.data)?;
    let model = args
        .hyper
        .method(args.method)
        .fit(&data, args.metric.into())?;
    emit(&args.out, &dataio::model_to_string(&model))
}

fn cmd_score(args: &ScoreArgs) -> CliResult<()> {
    let model = dataio::load_model(&args.model)?;
    let data = dataio::load_jsonl(&args.data)?;
    let conf = score_all(&model, &data)?;
    let mut csv = String::from("id,confidence\n");
    for (inst, c) in data.iter().zip(conf) {
        writeln!(csv, "{},{}", csv_field(&inst.id), fmt_f64(c)).expect("write to string");
    }
    emit(&args.out, &csv)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_calibrate(args: &CalibrateArgs) -> CliResult<()> {
    check_ratio(args.ratio)?;
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let kind: MetricKind = args.metric.into();
    let mut targets = Vec::new();
    for &alpha in &args.targets {
        if !(0.0..1.0).contains(&alpha) {
            return Err(usage(format!("target rate {alpha} must lie in [0, 1)")));
        }
        targets.push(CalibrationTarget::Rate { alpha });
    }
    targets.extend(
        args.target_perf
            .iter()
            .map(|&p| CalibrationTarget::Performance { p, metric: kind }),
    );
    let data = dataio::load_jsonl(&args.data)?;
    let method = args.hyper.method(args.method);
    let reports = calibration::calibration_mae(
        &data, &method, kind, &targets, args.seeds, args.seed, args.ratio,
    )?;
    let out = json!({
        "method": method.name(),
        "metric": kind,
        "reports": reports,
        "seed": args.seed,
        "seeds": args.seeds,
        "ratio": args.ratio,
        "rng": RNG_ALGORITHM,
    });
    emit(&args.out, &to_json_text(&out))
}

fn cmd_transfer(args: &TransferArgs) -> CliResult<()> {
    let reference = dataio::load_jsonl(&args.reference)?;
    let test = dataio::load_jsonl(&args.test)?;
    let report = calibration::domain_transfer(
        &reference,
        &test,
        &args.hyper.method(args.method),
        args.metric.into(),
    )?;
    emit(
        &args.out,
        &to_json_text(&Value::Object(report_json(&report))),
    )
}

fn opt_csv(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn cmd_refsize(args: &RefsizeArgs) -> CliResult<()> {
    check_ratio(args.ratio)?;
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let data = dataio::load_jsonl(&args.data)?;
    let table = calibration::refsize_sweep(
        &data,
        &args.hyper.method(args.method),
        &args.hyper.method(args.baseline),
        args.metric.into(),
        &args.sizes,
        args.seeds,
        args.seed,
        args.ratio,
    )?;
    let text = match args.format {
        Format::Json => {
            let mut v = serde_json::to_value(&table).expect("table serializes");
            v["seed"] = json!(args.seed);
            v["seeds"] = json!(args.seeds);
            v["rng"] = json!(RNG_ALGORITHM);
            to_json_text(&v)
        }
        Format::Csv => {
            let mut csv = String::from("size,method_nauc,baseline_nauc\n");
            for r in &table.rows {
                writeln!(
                    csv,
                    "{},{},{}",
                    r.size,
                    fmt_f64(r.method_nauc),
                    fmt_f64(r.baseline_nauc)
                )
                .expect("write to string");
            }
            csv
        }
    };
    emit(&args.out, &text)
}

fn cmd_sweep_q(args: &SweepQArgs) -> CliResult<()> {
    check_ratio(args.ratio)?;
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let data = dataio::load_jsonl(&args.data)?;
    let rows = calibration::qualification_sweep(
        &data,
        args.metric.into(),
        &args.q_values,
        args.seeds,
        args.seed,
        args.ratio,
        args.l2_lambda,
        args.cov_eps,
    )?;
    let text = match args.format {
        Format::Json => to_json_text(&json!({
            "rows": rows,
            "seed": args.seed,
            "seeds": args.seeds,
            "rng": RNG_ALGORITHM,
        })),
        Format::Csv => {
            let mut csv = String::from("q,nauc_log,nauc_mah\n");
            for r in &rows {
                writeln!(
                    csv,
                    "{},{},{}",
                    fmt_f64(r.q),
                    opt_csv(r.nauc_log),
                    opt_csv(r.nauc_mah)
                )
                .expect("write to string");
            }
            csv
        }
    };
    emit(&args.out, &text)
}

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let cfg = SynthConfig {
        n_instances: args.n,
        k: args.k,
        separability: args.separability,
        noise_sigma: args.noise_sigma,
        positives_range: (args.min_positives, args.max_positives),
        rng_seed: args.seed,
    };
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    let ds = dataio::synth_generate(&cfg)?;
    emit(&args.out, &dataio::dataset_to_jsonl(&ds))
}

fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    if args.reps < 1 {
        return Err(usage("--reps must be at least 1"));
    }
    let model = dataio::load_model(&args.model)?;
    let data = dataio::load_jsonl(&args.data)?;
    score_all(&model, &data)?;
    let n = data.len();
    let mut per_instance = Vec::with_capacity(args.reps);
    for _ in 0..args.reps {
        let start = Instant::now();
        for inst in &data {
            std::hint::black_box(model.score(std::hint::black_box(inst.scores()))?);
        }
        per_instance.push(start.elapsed().as_nanos() as f64 / n as f64);
    }
    let mean = per_instance.iter().sum::<f64>() / per_instance.len() as f64;
    per_instance.sort_by(f64::total_cmp);
    let mid = per_instance.len() / 2;
    let median = if per_instance.len() % 2 == 0 {
        0.5 * (per_instance[mid - 1] + per_instance[mid])
    } else {
        per_instance[mid]
    };
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let out = json!({
        "method": model.name(),
        "instances": n,
        "k": data.k(),
        "repetitions": args.reps,
        "mean_ns_per_instance": mean,
        "median_ns_per_instance": median,
        "note": "confidence evaluation only; relevance scores are precomputed inputs and their cost is not measured",
        "metadata": {"timestamp_unix": timestamp},
    });
    emit(&args.out, &to_json_text(&out))
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Prep(a) => cmd_prep(a),
        Command::Fit(a) => cmd_fit(a),
        Command::Score(a) => cmd_score(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Curve(a) => cmd_curve(a),
        Command::Calibrate(a) => cmd_calibrate(a),
        Command::Transfer(a) => cmd_transfer(a),
        Command::Refsize(a) => cmd_refsize(a),
        Command::SweepQ(a) => cmd_sweep_q(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        // fails only if a pool already exists, which is fine
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match configure_threads().and_then(|_| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
