//! Cost scalarisation, the adaptive fairness weight and end-to-end repair.
//!
//! A candidate's cost is `beta * f + (1 - beta) * (1 - a)`. The constant
//! majority predictor (accuracy `a0`, bias 0) sets the threshold
//! `(1 - beta) * (1 - a0)` a candidate has to beat. The weight starts at the
//! lower bound that puts the original model exactly on that threshold and is
//! then adjusted by [`BetaState::update`] as trials come in.

use serde::{Deserialize, Serialize};

use crate::digest::sha256_hex;
use crate::exec::{ExecError, Executor};
use crate::fairea::{build_baseline, BaselineSpec, FaireaError, TradeoffBaseline, TradeoffPoint, TradeoffRegion};
use crate::metrics::{BiasScorer, MetricError, MetricKind, DEFAULT_DI_CAP};
use crate::model_zoo::{self, default_config, default_space, AlgorithmKind, FittedPipeline, PipelineConfig, ZooError};
use crate::prune_db::{match_input, Database};
use crate::seed;
use crate::smbo::{self, Budget, Evaluation, SmboError, TrialLog, TrialObserver, TrialRecord};
use crate::tabular::{characteristics, split, DataError, Dataset, FeatureColumn};

/// Keeps `1 - beta` away from zero.
pub const EPSILON: f64 = 0.01;
pub const MAX_BETA: f64 = 1.0 - EPSILON;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_PATIENCE: usize = 20;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;
/// Bias below this counts as zero when deciding whether repair is needed.
pub const FAIR_TOLERANCE: f64 = 1e-6;
/// Margin a trial must clear below the threshold to count as an improvement.
/// Without it, the original model sits on the threshold up to rounding.
pub const IMPROVEMENT_MARGIN: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum RepairError {
    #[error("model is already fair (accuracy {accuracy:.4}, bias {bias:.3e}); nothing to repair")]
    AlreadyFair { accuracy: f64, bias: f64 },
    #[error("budget allows no trials")]
    BudgetExhaustedNoTrials,
    #[error("invalid repair config: {0}")]
    InvalidConfig(String),
    #[error("no trial succeeded")]
    NoSuccessfulTrial,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ZooError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Fairea(#[from] FaireaError),
    #[error(transparent)]
    Exec(#[from] ExecError),
}

impl From<SmboError> for RepairError {
    fn from(e: SmboError) -> Self {
        match e {
            SmboError::BudgetExhaustedNoTrials => RepairError::BudgetExhaustedNoTrials,
            SmboError::NoSuccessfulTrial => RepairError::NoSuccessfulTrial,
            other => RepairError::InvalidConfig(other.to_string()),
        }
    }
}

/// Accuracy of always predicting the majority class: `max(P(y=1), P(y=0))`.
pub fn pseudo_accuracy(y: &[u8]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let ones = y.iter().filter(|&&v| v == 1).count() as f64;
    let p = ones / y.len() as f64;
    p.max(1.0 - p)
}

pub fn cost(beta: f64, bias: f64, accuracy: f64) -> f64 {
    beta * bias + (1.0 - beta) * (1.0 - accuracy)
}

/// Cost of the majority predictor.
pub fn pseudo_cost(beta: f64, a0: f64) -> f64 {
    (1.0 - beta) * (1.0 - a0)
}

/// Whether a trial beats the majority predictor at `beta`.
pub fn improves(beta: f64, bias: f64, accuracy: f64, a0: f64) -> bool {
    cost(beta, bias, accuracy) < pseudo_cost(beta, a0) - IMPROVEMENT_MARGIN
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    /// `(a1 - a0) / (a1 - a0 + f1)` before clamping.
    pub raw: f64,
    /// Clamped into `[0, 1 - EPSILON]`; zero whenever `a1 <= a0`.
    pub value: f64,
}

/// Smallest weight at which the original model is no better than the majority predictor.
pub fn beta_lower_bound(a1: f64, a0: f64, f1: f64) -> Result<LowerBound, RepairError> {
    if f1 < FAIR_TOLERANCE && a1 > a0 {
        return Err(RepairError::AlreadyFair { accuracy: a1, bias: f1 });
    }
    let gap = a1 - a0;
    let denom = gap + f1;
    let raw = if denom == 0.0 { 0.0 } else { gap / denom };
    let value = if gap <= 0.0 { 0.0 } else { raw.clamp(0.0, MAX_BETA) };
    Ok(LowerBound { raw, value })
}

/// State of the adaptive fairness weight.
///
/// The weight rises by `alpha` on every improving trial. After `patience`
/// consecutive non-improving trials it steps back once (not below the lower
/// bound) and freezes for the rest of the search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaState {
    pub beta: f64,
    pub alpha: f64,
    pub count: usize,
    pub checker: bool,
    pub patience: usize,
    pub lower: f64,
    pub a0: f64,
    pub a1: f64,
    pub f1: f64,
}

impl BetaState {
    pub fn new(bound: LowerBound, alpha: f64, patience: usize, a0: f64, a1: f64, f1: f64) -> Self {
        Self {
            beta: bound.value,
            alpha,
            count: 0,
            checker: false,
            patience,
            lower: bound.value,
            a0,
            a1,
            f1,
        }
    }

    pub fn greedy_update(self, improved: bool) -> Self {
        let mut next = self;
        next.update(improved);
        next
    }

    pub fn update(&mut self, improved: bool) {
        if self.checker {
            return;
        }
        if improved {
            self.beta = (self.beta + self.alpha).min(MAX_BETA);
            self.count = 0;
        } else {
            self.count += 1;
            if self.count >= self.patience {
                self.beta = (self.beta - self.alpha).max(self.lower);
                self.checker = true;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RepairConfig {
    pub metric: MetricKind,
    pub budget: Budget,
    pub seed: u64,
    pub alpha: f64,
    pub patience: usize,
    pub train_fraction: f64,
    pub repetitions: usize,
    pub di_cap: f64,
    pub workers: usize,
}

impl RepairConfig {
    pub fn new(metric: MetricKind, trials: usize, seed: u64) -> Self {
        Self {
            metric,
            budget: Budget::trials(trials),
            seed,
            alpha: DEFAULT_ALPHA,
            patience: DEFAULT_PATIENCE,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            repetitions: crate::fairea::DEFAULT_REPETITIONS,
            di_cap: DEFAULT_DI_CAP,
            workers: 1,
        }
    }

    fn validate(&self) -> Result<(), RepairError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(RepairError::InvalidConfig(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.patience == 0 {
            return Err(RepairError::InvalidConfig("patience must be at least 1".into()));
        }
        if self.di_cap.is_nan() || self.di_cap <= 0.0 {
            return Err(RepairError::InvalidConfig("di cap must be positive".into()));
        }
        Ok(())
    }
}

/// Where the search space came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SpaceSource {
    Default,
    Database { dataset: String, protected: String },
}

#[derive(Debug, Clone)]
pub struct RepairResult {
    pub best: TrialRecord,
    pub model: FittedPipeline,
    pub log: TrialLog,
    pub beta: BetaState,
    pub beta_trace: Vec<(usize, f64)>,
    pub lower_bound: LowerBound,
    pub original: TradeoffPoint,
    pub repaired: TradeoffPoint,
    pub region: TradeoffRegion,
    pub baseline: TradeoffBaseline,
    pub space: SpaceSource,
    pub input_digest: String,
    pub di_cap: f64,
}

/// JSON report of a repair run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub input_digest: String,
    pub metric: MetricKind,
    pub di_cap: f64,
    pub a0: f64,
    pub a1: f64,
    pub f1: f64,
    #[serde(rename = "L")]
    pub lower_bound: f64,
    pub beta_trace: Vec<(usize, f64)>,
    pub final_beta: f64,
    pub trials: usize,
    pub best_trial: usize,
    pub best_config: PipelineConfig,
    pub repaired: TradeoffPoint,
    pub original: TradeoffPoint,
    pub region: TradeoffRegion,
    pub space: SpaceSource,
    pub baseline: TradeoffBaseline,
    pub log_digest: String,
}

impl RepairResult {
    pub fn report(&self) -> RepairReport {
        RepairReport {
            input_digest: self.input_digest.clone(),
            metric: self.baseline.metric,
            di_cap: self.di_cap,
            a0: self.beta.a0,
            a1: self.beta.a1,
            f1: self.beta.f1,
            lower_bound: self.lower_bound.value,
            beta_trace: self.beta_trace.clone(),
            final_beta: self.beta.beta,
            trials: self.log.len(),
            best_trial: self.best.index,
            best_config: self.best.config.clone(),
            repaired: self.repaired,
            original: self.original,
            region: self.region,
            space: self.space.clone(),
            baseline: self.baseline.clone(),
            log_digest: format!("{:016x}", self.log.digest()),
        }
    }
}

/// SHA-256 over labels, protected values and feature contents.
pub fn dataset_digest(ds: &Dataset) -> String {
    let mut bytes = Vec::new();
    bytes.extend_from_slice(ds.labels());
    bytes.extend_from_slice(ds.protected());
    for (name, col) in ds.feature_names().iter().zip(ds.columns()) {
        bytes.extend_from_slice(name.as_bytes());
        bytes.push(0);
        match col {
            FeatureColumn::Numeric(v) => v
                .iter()
                .for_each(|x| bytes.extend_from_slice(&x.to_bits().to_be_bytes())),
            FeatureColumn::Categorical { levels, codes } => {
                for l in levels {
                    bytes.extend_from_slice(l.as_bytes());
                    bytes.push(0);
                }
                codes.iter().for_each(|c| bytes.extend_from_slice(&c.to_be_bytes()));
            }
        }
    }
    sha256_hex(&bytes)
}

struct GreedyObserver {
    state: BetaState,
    trace: Vec<(usize, f64)>,
}

impl TrialObserver for GreedyObserver {
    fn beta(&self) -> f64 {
        self.state.beta
    }

    fn on_trial(&mut self, record: &TrialRecord) {
        let improved = match (record.bias, record.accuracy) {
            (Some(f), Some(a)) if record.is_ok() => improves(self.state.beta, f, a, self.state.a0),
            _ => false,
        };
        self.state.update(improved);
        self.trace.push((record.index, self.state.beta));
    }
}

struct Setup {
    train: Dataset,
    val: Dataset,
    train_seed: u64,
    scorer: BiasScorer,
    initial: PipelineConfig,
    buggy_pred: Vec<u8>,
}

/// Split and original-model predictions shared by [`repair_with`] and [`original_baseline`].
fn setup(ds: &Dataset, algorithm: AlgorithmKind, cfg: &RepairConfig) -> Result<Setup, RepairError> {
    let (train, val) = split(ds, cfg.train_fraction, cfg.seed)?;
    let train_seed = seed::derive(cfg.seed, seed::STREAM_TRAIN, 0);
    let initial = default_config(algorithm);
    let buggy = model_zoo::train(&initial, &train, train_seed)?;
    let buggy_pred = buggy.predict(&val)?;
    Ok(Setup {
        train,
        val,
        train_seed,
        scorer: BiasScorer {
            kind: cfg.metric,
            di_cap: cfg.di_cap,
        },
        initial,
        buggy_pred,
    })
}

fn baseline_spec(cfg: &RepairConfig) -> BaselineSpec {
    BaselineSpec {
        scorer: BiasScorer {
            kind: cfg.metric,
            di_cap: cfg.di_cap,
        },
        degrees: crate::fairea::default_degrees(),
        repetitions: cfg.repetitions,
        seed: seed::derive(cfg.seed, seed::STREAM_BASELINE, 0),
    }
}

/// The mutation baseline of the unrepaired model, exactly as [`repair`] builds it for the same config.
pub fn original_baseline(
    ds: &Dataset,
    algorithm: AlgorithmKind,
    cfg: &RepairConfig,
    exec: &Executor,
) -> Result<TradeoffBaseline, RepairError> {
    cfg.validate()?;
    let s = setup(ds, algorithm, cfg)?;
    Ok(build_baseline(
        &s.buggy_pred,
        &s.val,
        s.train.majority_label(),
        &baseline_spec(cfg),
        exec,
    )?)
}

/// Repairs the default `algorithm` model on `ds`, using the executor implied by `cfg.workers`.
pub fn repair(
    ds: &Dataset,
    algorithm: AlgorithmKind,
    cfg: &RepairConfig,
    db: Option<&Database>,
) -> Result<RepairResult, RepairError> {
    let exec = if cfg.workers <= 1 {
        Executor::sequential()
    } else {
        Executor::with_workers(cfg.workers)?
    };
    repair_with(ds, algorithm, cfg, db, &exec)
}

pub fn repair_with(
    ds: &Dataset,
    algorithm: AlgorithmKind,
    cfg: &RepairConfig,
    db: Option<&Database>,
    exec: &Executor,
) -> Result<RepairResult, RepairError> {
    cfg.validate()?;
    let Setup {
        train,
        val,
        train_seed,
        scorer,
        initial,
        buggy_pred,
    } = setup(ds, algorithm, cfg)?;
    let (y, z) = (val.labels(), val.protected());
    let (a1, f1) = scorer.evaluate(y, &buggy_pred, z)?;
    if f1 < FAIR_TOLERANCE {
        return Err(RepairError::AlreadyFair { accuracy: a1, bias: f1 });
    }
    let a0 = pseudo_accuracy(y);
    let bound = beta_lower_bound(a1, a0, f1)?;
    log::info!("buggy model: acc={a1:.4} bias={f1:.4} a0={a0:.4} L={:.4}", bound.value);

    let (space, source) = match db.and_then(|db| match_input(db, characteristics(ds), bound.value, algorithm)) {
        Some(entry) => {
            log::info!("using pruned space from `{}` ({})", entry.dataset, entry.protected);
            (
                entry.space(),
                SpaceSource::Database {
                    dataset: entry.dataset.clone(),
                    protected: entry.protected.clone(),
                },
            )
        }
        None => (default_space(algorithm), SpaceSource::Default),
    };

    let objective = |c: &PipelineConfig, _trial: usize| -> Result<Evaluation, String> {
        let fp = model_zoo::train(c, &train, train_seed).map_err(|e| e.to_string())?;
        let pred = fp.predict(&val).map_err(|e| e.to_string())?;
        let (accuracy, bias) = scorer.evaluate(y, &pred, z).map_err(|e| e.to_string())?;
        Ok(Evaluation { accuracy, bias })
    };
    let mut observer = GreedyObserver {
        state: BetaState::new(bound, cfg.alpha, cfg.patience, a0, a1, f1),
        trace: Vec::new(),
    };
    let log = smbo::run(&objective, &space, &initial, cfg.budget, cfg.seed, &mut observer, exec)?;
    let state = observer.state;
    let best = smbo::best(&log, state.beta)?.clone();
    let model = model_zoo::train(&best.config, &train, train_seed)?;

    let baseline = build_baseline(&buggy_pred, &val, train.majority_label(), &baseline_spec(cfg), exec)?;
    let repaired = TradeoffPoint {
        bias: best.bias.expect("ok trial"),
        acc: best.accuracy.expect("ok trial"),
    };
    let region = baseline.classify(repaired);
    log::info!(
        "best trial {} acc={:.4} bias={:.4} region={region}",
        best.index,
        repaired.acc,
        repaired.bias
    );
    Ok(RepairResult {
        best,
        model,
        log,
        beta: state,
        beta_trace: observer.trace,
        lower_bound: bound,
        original: baseline.original,
        repaired,
        region,
        baseline,
        space: source,
        input_digest: dataset_digest(ds),
        di_cap: cfg.di_cap,
    })
}
