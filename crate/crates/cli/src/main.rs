use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use fairfix::fairea::TradeoffBaseline;
use fairfix::prune_db::{self, build_entry, BuildConfig, Database, DbError};
use fairfix::repair::{original_baseline, repair_with, RepairConfig, RepairError, RepairReport};
use fairfix::smbo::Budget;
use fairfix::tabular::{load_csv, DataError, Schema};
use fairfix::{AlgorithmKind, Executor, MetricKind};

#[derive(Parser)]
#[command(
    name = "fairfix",
    version,
    about = "Repair biased binary classifiers by fairness-aware hyperparameter search"
)]
struct Cli {
    /// Worker threads; 1 is the deterministic reference mode.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a fairer configuration of the default model.
    Repair(RepairArgs),
    /// Build the mutation baseline of the default model.
    Baseline(BaselineArgs),
    /// Build a pruned search-space database from a corpus directory.
    BuildDb(BuildDbArgs),
    /// Re-classify a repair report against a baseline file.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    model: AlgorithmKind,
    #[arg(long)]
    metric: MetricKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RepairArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Trial budget. Defaults to 100 when --seconds is not given either.
    #[arg(long)]
    trials: Option<usize>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    seconds: Option<f64>,
    /// Database of pruned search spaces.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Baseline repetitions per mutation degree.
    #[arg(long, default_value_t = fairfix::fairea::DEFAULT_REPETITIONS)]
    reps: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the trial log as newline-delimited JSON.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = fairfix::fairea::DEFAULT_REPETITIONS)]
    reps: usize,
    /// Baseline JSON; the plot data goes next to it with a `.csv` extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildDbArgs {
    /// Directory holding `manifest.json` and the files it names.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = prune_db::DEFAULT_RUNS)]
    runs: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = prune_db::DEFAULT_TOP_K)]
    top_k: usize,
    #[arg(long, default_value_t = prune_db::DEFAULT_TOP_M)]
    top_m: usize,
    #[arg(long, default_value_t = prune_db::DEFAULT_DEV)]
    dev: f64,
    /// Metric for corpus items that do not name one.
    #[arg(long, default_value = "spd")]
    metric: MetricKind,
    #[arg(long, default_value_t = fairfix::fairea::DEFAULT_REPETITIONS)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    baseline: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusItem {
    data: PathBuf,
    schema: PathBuf,
    model: AlgorithmKind,
    #[serde(default)]
    metric: Option<MetricKind>,
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<DataError> for Failure {
    fn from(e: DataError) -> Self {
        Failure::new(3, e.to_string())
    }
}

impl From<RepairError> for Failure {
    fn from(e: RepairError) -> Self {
        let code = match e {
            RepairError::AlreadyFair { .. } => 4,
            RepairError::Data(_) => 3,
            RepairError::InvalidConfig(_) | RepairError::BudgetExhaustedNoTrials => 2,
            _ => 1,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<DbError> for Failure {
    fn from(e: DbError) -> Self {
        Failure::new(3, e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(1, format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| io_failure(path, e))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, code: u8) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::new(code, format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::new(code, format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

fn executor(workers: usize) -> Result<Executor, Failure> {
    if workers <= 1 {
        return Ok(Executor::sequential());
    }
    Executor::with_workers(workers).map_err(|e| Failure::new(2, e.to_string()))
}

fn load_input(input: &InputArgs) -> Result<fairfix::Dataset, Failure> {
    let schema = Schema::from_path(&input.schema)?;
    Ok(load_csv(&input.data, &schema)?)
}

fn cmd_repair(args: RepairArgs, exec: &Executor) -> Result<u8, Failure> {
    let ds = load_input(&args.input)?;
    let db = args.db.as_ref().map(Database::load).transpose()?;
    let mut cfg = RepairConfig::new(args.input.metric, 0, args.input.seed);
    cfg.budget = match (args.trials, args.seconds) {
        (None, None) => Budget::trials(100),
        (trials, seconds) => Budget { trials, seconds },
    };
    cfg.repetitions = args.reps;
    cfg.workers = exec.workers();
    let result = repair_with(&ds, args.input.model, &cfg, db.as_ref(), exec)?;
    write_file(&args.out, &to_json(&result.report()))?;
    if let Some(path) = &args.log {
        let mut buf = Vec::new();
        result
            .log
            .write_ndjson(&mut buf)
            .map_err(|e| Failure::new(1, e.to_string()))?;
        write_file(path, &String::from_utf8(buf).expect("json is utf-8"))?;
    }
    println!(
        "region={} acc {:.4}→{:.4} bias {:.4}→{:.4}",
        result.region, result.original.acc, result.repaired.acc, result.original.bias, result.repaired.bias
    );
    Ok(0)
}

fn baseline_csv(baseline: &TradeoffBaseline) -> String {
    let mut out = String::from("degree,bias,acc\n");
    for p in &baseline.points {
        out.push_str(&format!("{},{},{}\n", p.degree, p.bias, p.acc));
    }
    out
}

fn cmd_baseline(args: BaselineArgs, exec: &Executor) -> Result<u8, Failure> {
    let ds = load_input(&args.input)?;
    let mut cfg = RepairConfig::new(args.input.metric, 1, args.input.seed);
    cfg.repetitions = args.reps;
    let baseline = original_baseline(&ds, args.input.model, &cfg, exec)?;
    write_file(&args.out, &to_json(&baseline))?;
    let csv_path = args.out.with_extension("csv");
    write_file(&csv_path, &baseline_csv(&baseline))?;
    println!(
        "degrees={} a0={:.4} original acc {:.4} bias {:.4}",
        baseline.points.len(),
        baseline.a0,
        baseline.original.acc,
        baseline.original.bias
    );
    Ok(0)
}

fn cmd_build_db(args: BuildDbArgs, exec: &Executor) -> Result<u8, Failure> {
    let manifest = args.corpus.join("manifest.json");
    let items: Vec<CorpusItem> = if manifest.exists() {
        read_json(&manifest, 3)?
    } else {
        Vec::new()
    };
    let mut repair = RepairConfig::new(args.metric, args.trials, args.seed);
    repair.repetitions = args.reps;
    let mut cfg = BuildConfig {
        runs: args.runs,
        top_k: args.top_k,
        top_m: args.top_m,
        dev: args.dev,
        repair,
    };
    let mut db = Database::new(cfg.provenance());
    for item in items {
        let data = args.corpus.join(&item.data);
        let schema = Schema::from_path(args.corpus.join(&item.schema))?;
        let ds = load_csv(&data, &schema)?;
        let name = item
            .data
            .file_stem()
            .map_or_else(|| item.data.display().to_string(), |s| s.to_string_lossy().into_owned());
        cfg.repair.metric = item.metric.unwrap_or(args.metric);
        log::info!("building entry for {name} ({})", item.model);
        let entry = build_entry(&ds, &name, &schema.protected_column, item.model, &cfg, exec)?;
        db.entries.push(entry);
    }
    db.save(&args.out)?;
    println!("entries={} out={}", db.entries.len(), args.out.display());
    Ok(0)
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<u8, Failure> {
    let report: RepairReport = read_json(&args.report, 2)?;
    let baseline: TradeoffBaseline = read_json(&args.baseline, 2)?;
    if report.metric != baseline.metric {
        return Err(Failure::new(
            2,
            format!(
                "report metric {} does not match baseline metric {}",
                report.metric, baseline.metric
            ),
        ));
    }
    let region = baseline.classify(report.repaired);
    println!(
        "region={region} acc {:.4}→{:.4} bias {:.4}→{:.4}",
        baseline.original.acc, report.repaired.acc, baseline.original.bias, report.repaired.bias
    );
    Ok(if region.is_success() { 0 } else { 1 })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIRFIX_LOG", "error")).init();
    let cli = Cli::parse();
    let outcome = executor(cli.workers).and_then(|exec| match cli.command {
        Command::Repair(a) => cmd_repair(a, &exec),
        Command::Baseline(a) => cmd_baseline(a, &exec),
        Command::BuildDb(a) => cmd_build_db(a, &exec),
        Command::Evaluate(a) => cmd_evaluate(a),
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
