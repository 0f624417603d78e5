//! Sequential model-based optimisation over pipeline spaces.
//!
//! Trial 0 is always the caller's initial (unrepaired) configuration, the next
//! [`INITIAL_RANDOM`] trials are random samples, and later trials come from
//! [`suggest`]. Costs are computed from the `beta` reported by the
//! [`TrialObserver`] at the moment each trial is recorded.

mod surrogate;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use surrogate::{expected_improvement, Surrogate};

use crate::digest::digest64;
use crate::exec::Executor;
use crate::model_zoo::{HyperparameterSpace, PipelineConfig};
use crate::repair::cost;
use crate::seed::{self, Rng as SeedRng};

pub const INITIAL_RANDOM: usize = 10;
pub const CANDIDATES: usize = 500;
pub const EXPLORATION: f64 = 0.1;
pub const MIN_MODEL_TRIALS: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum SmboError {
    #[error("budget allows no trials")]
    BudgetExhaustedNoTrials,
    #[error("no successful trial in the log")]
    NoSuccessfulTrial,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Trial budget: a trial count, a wall-clock limit, or both (whichever ends first).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub trials: Option<usize>,
    pub seconds: Option<f64>,
}

impl Budget {
    pub fn trials(n: usize) -> Self {
        Self {
            trials: Some(n),
            seconds: None,
        }
    }

    fn allows_any(&self) -> bool {
        match (self.trials, self.seconds) {
            (Some(0), _) => false,
            (None, None) => false,
            (_, Some(s)) if s.is_nan() || s <= 0.0 => false,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub bias: f64,
}

pub trait Objective: Sync {
    /// Validation (accuracy, bias) of `config`, or an error message for a failed trial.
    fn evaluate(&self, config: &PipelineConfig, trial: usize) -> Result<Evaluation, String>;
}

impl<F> Objective for F
where
    F: Fn(&PipelineConfig, usize) -> Result<Evaluation, String> + Sync,
{
    fn evaluate(&self, config: &PipelineConfig, trial: usize) -> Result<Evaluation, String> {
        self(config, trial)
    }
}

/// Supplies the current fairness weight and sees every completed trial.
pub trait TrialObserver {
    fn beta(&self) -> f64;
    fn on_trial(&mut self, record: &TrialRecord);
}

/// Observer with a constant weight.
#[derive(Debug, Clone, Copy)]
pub struct FixedBeta(pub f64);

impl TrialObserver for FixedBeta {
    fn beta(&self) -> f64 {
        self.0
    }

    fn on_trial(&mut self, _: &TrialRecord) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Proposal {
    Initial,
    Random,
    Surrogate,
    Exploration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub config: PipelineConfig,
    pub proposal: Proposal,
    pub status: TrialStatus,
    pub accuracy: Option<f64>,
    pub bias: Option<f64>,
    /// Cost at the weight in force when the trial was recorded.
    pub cost: Option<f64>,
    pub beta: f64,
    pub wall_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn is_ok(&self) -> bool {
        self.status == TrialStatus::Ok
    }

    /// Cost re-scored at `beta`; `None` for failed trials.
    pub fn cost_at(&self, beta: f64) -> Option<f64> {
        match (self.status, self.bias, self.accuracy) {
            (TrialStatus::Ok, Some(f), Some(a)) => Some(cost(beta, f, a)),
            _ => None,
        }
    }
}

/// Append-only trial history.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialLog {
    records: Vec<TrialRecord>,
    rng_digest: u64,
}

impl TrialLog {
    /// Log rebuilt from stored records, e.g. read back with [`TrialLog::read_ndjson`].
    pub fn from_records(records: Vec<TrialRecord>, rng_digest: u64) -> Self {
        Self { records, rng_digest }
    }

    pub fn records(&self) -> &[TrialRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn rng_digest(&self) -> u64 {
        self.rng_digest
    }

    pub fn ok_records(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(|r| r.is_ok())
    }

    /// Stable digest of everything except wall-clock timings.
    pub fn digest(&self) -> u64 {
        let mut bytes = Vec::new();
        for r in &self.records {
            let mut r = r.clone();
            r.wall_ms = 0.0;
            serde_json::to_writer(&mut bytes, &r).expect("record serializes");
            bytes.push(b'\n');
        }
        bytes.extend_from_slice(&self.rng_digest.to_be_bytes());
        digest64(&bytes)
    }

    /// One JSON object per line.
    pub fn write_ndjson<W: Write>(&self, mut out: W) -> Result<(), SmboError> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_ndjson(text: &str) -> Result<Vec<TrialRecord>, SmboError> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(SmboError::from))
            .collect()
    }
}

/// The ok trial with the lowest cost at `beta`; ties go to the lower index.
pub fn best(log: &TrialLog, beta: f64) -> Result<&TrialRecord, SmboError> {
    let mut best: Option<(&TrialRecord, f64)> = None;
    for r in log.ok_records() {
        let c = r.cost_at(beta).expect("ok record has metrics");
        if best.is_none_or(|(_, b)| c < b) {
            best = Some((r, c));
        }
    }
    best.map(|(r, _)| r).ok_or(SmboError::NoSuccessfulTrial)
}

fn rng_digest(rng: &SeedRng) -> u64 {
    let mut bytes = rng.get_seed().to_vec();
    bytes.extend_from_slice(&rng.get_word_pos().to_be_bytes());
    digest64(&bytes)
}

/// Next configuration to evaluate, with how it was chosen.
///
/// Fits the surrogate on the in-space ok trials (costs re-scored at `beta`)
/// and returns the best of [`CANDIDATES`] random samples by expected
/// improvement. Falls back to a random sample with fewer than
/// [`MIN_MODEL_TRIALS`] usable trials, and explores at random with
/// probability [`EXPLORATION`].
pub fn suggest(
    log: &TrialLog,
    space: &HyperparameterSpace,
    beta: f64,
    rng: &mut SeedRng,
    exec: &Executor,
) -> (PipelineConfig, Proposal) {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in log.ok_records() {
        if let Ok(x) = space.encode(&r.config) {
            xs.push(x);
            ys.push(r.cost_at(beta).expect("ok record has metrics"));
        }
    }
    if xs.len() < MIN_MODEL_TRIALS {
        return (space.sample(rng), Proposal::Random);
    }
    if rng.gen::<f64>() < EXPLORATION {
        return (space.sample(rng), Proposal::Exploration);
    }
    let categorical: Vec<bool> = space.coordinate_kinds().iter().map(Option::is_some).collect();
    let model = Surrogate::fit(&xs, &ys, &categorical, rng);
    let incumbent = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let candidates: Vec<PipelineConfig> = (0..CANDIDATES).map(|_| space.sample(rng)).collect();
    let scores = exec.map(candidates.len(), |i| {
        let x = space.encode(&candidates[i]).expect("sampled config is in space");
        let (mean, std) = model.predict(&x);
        expected_improvement(mean, std, incumbent)
    });
    let mut pick = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[pick] {
            pick = i;
        }
    }
    (candidates.into_iter().nth(pick).unwrap(), Proposal::Surrogate)
}

/// Runs the search loop until the budget is spent.
///
/// With more than one worker, trials are proposed in batches of the worker
/// count, evaluated concurrently, and recorded in index order.
pub fn run<O: Objective + ?Sized, T: TrialObserver + ?Sized>(
    objective: &O,
    space: &HyperparameterSpace,
    initial: &PipelineConfig,
    budget: Budget,
    seed: u64,
    observer: &mut T,
    exec: &Executor,
) -> Result<TrialLog, SmboError> {
    if !budget.allows_any() {
        return Err(SmboError::BudgetExhaustedNoTrials);
    }
    let start = Instant::now();
    let deadline = budget.seconds.map(|s| start + Duration::from_secs_f64(s));
    let max_trials = budget.trials.unwrap_or(usize::MAX);
    let mut rng = seed::derived_rng(seed, seed::STREAM_SEARCH, 0);
    let mut log = TrialLog::default();
    let batch = exec.workers().max(1);

    while log.len() < max_trials {
        if !log.is_empty() && deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let size = batch.min(max_trials - log.len());
        let beta = observer.beta();
        let proposals: Vec<(PipelineConfig, Proposal)> = (0..size)
            .map(|j| {
                let index = log.len() + j;
                if index == 0 {
                    (initial.clone(), Proposal::Initial)
                } else if index <= INITIAL_RANDOM {
                    (space.sample(&mut rng), Proposal::Random)
                } else {
                    suggest(&log, space, beta, &mut rng, exec)
                }
            })
            .collect();
        let first = log.len();
        let outcomes = exec.map(size, |j| {
            let t0 = Instant::now();
            let result = objective.evaluate(&proposals[j].0, first + j);
            (result, t0.elapsed().as_secs_f64() * 1e3)
        });
        for ((config, proposal), (result, wall_ms)) in proposals.into_iter().zip(outcomes) {
            let beta = observer.beta();
            let record = match result {
                Ok(e) if e.accuracy.is_finite() && e.bias.is_finite() => TrialRecord {
                    index: log.len(),
                    config,
                    proposal,
                    status: TrialStatus::Ok,
                    accuracy: Some(e.accuracy),
                    bias: Some(e.bias),
                    cost: Some(cost(beta, e.bias, e.accuracy)),
                    beta,
                    wall_ms,
                    error: None,
                },
                other => TrialRecord {
                    index: log.len(),
                    config,
                    proposal,
                    status: TrialStatus::Failed,
                    accuracy: None,
                    bias: None,
                    cost: None,
                    beta,
                    wall_ms,
                    error: Some(match other {
                        Err(msg) => msg,
                        Ok(_) => "non-finite evaluation".into(),
                    }),
                },
            };
            log::debug!(
                "trial {} {:?} cost={:?} beta={:.3}",
                record.index,
                record.proposal,
                record.cost,
                beta
            );
            observer.on_trial(&record);
            log.records.push(record);
        }
    }
    log.rng_digest = rng_digest(&rng);
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_zoo::{default_config, default_space, AlgorithmKind, ComponentKind, ParamDef, Scale};

    fn line_space() -> HyperparameterSpace {
        HyperparameterSpace {
            algorithm: AlgorithmKind::Knn,
            params: vec![ParamDef::real("x", 0.0, 1.0, Scale::Linear)],
            components: vec![ComponentKind::None],
        }
    }

    fn x_of(cfg: &PipelineConfig) -> f64 {
        cfg.real("x").unwrap()
    }

    /// beta = 0 turns cost into 1 - accuracy = (x - 0.3)^2.
    fn bowl(cfg: &PipelineConfig, _: usize) -> Result<Evaluation, String> {
        let x = x_of(cfg);
        Ok(Evaluation {
            accuracy: 1.0 - (x - 0.3) * (x - 0.3),
            bias: 0.0,
        })
    }

    fn start() -> PipelineConfig {
        line_space().decode(&[0.0, 0.9])
    }

    fn record(index: usize, acc: f64, bias: f64, ok: bool) -> TrialRecord {
        TrialRecord {
            index,
            config: default_config(AlgorithmKind::Knn),
            proposal: Proposal::Random,
            status: if ok { TrialStatus::Ok } else { TrialStatus::Failed },
            accuracy: ok.then_some(acc),
            bias: ok.then_some(bias),
            cost: None,
            beta: 0.0,
            wall_ms: 0.0,
            error: None,
        }
    }

    #[test]
    fn single_trial_budget_runs_initial_only() {
        let log = run(
            &bowl,
            &line_space(),
            &start(),
            Budget::trials(1),
            0,
            &mut FixedBeta(0.0),
            &Executor::sequential(),
        )
        .unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.records()[0].config, start());
        assert_eq!(log.records()[0].proposal, Proposal::Initial);
    }

    #[test]
    fn zero_budget_is_an_error() {
        let r = run(
            &bowl,
            &line_space(),
            &start(),
            Budget::trials(0),
            0,
            &mut FixedBeta(0.0),
            &Executor::sequential(),
        );
        assert!(matches!(r, Err(SmboError::BudgetExhaustedNoTrials)));
    }

    #[test]
    fn indices_dense_and_proposals_phased() {
        let log = run(
            &bowl,
            &line_space(),
            &start(),
            Budget::trials(30),
            4,
            &mut FixedBeta(0.0),
            &Executor::sequential(),
        )
        .unwrap();
        for (i, r) in log.records().iter().enumerate() {
            assert_eq!(r.index, i);
            let expected_random = (1..=INITIAL_RANDOM).contains(&i);
            assert_eq!(r.proposal == Proposal::Random, expected_random, "trial {i}");
        }
    }

    #[test]
    fn bowl_minimum_found() {
        let mut hits = 0;
        for seed in 0..10 {
            let log = run(
                &bowl,
                &line_space(),
                &start(),
                Budget::trials(60),
                seed,
                &mut FixedBeta(0.0),
                &Executor::sequential(),
            )
            .unwrap();
            let b = best(&log, 0.0).unwrap();
            if (x_of(&b.config) - 0.3).abs() < 0.05 {
                hits += 1;
            }
        }
        assert!(hits >= 9, "{hits}/10");
    }

    #[test]
    fn suggestions_concentrate_over_time() {
        let mut early = 0.0;
        let mut late = 0.0;
        for seed in 0..10 {
            let log = run(
                &bowl,
                &line_space(),
                &start(),
                Budget::trials(60),
                seed,
                &mut FixedBeta(0.0),
                &Executor::sequential(),
            )
            .unwrap();
            let dist = |r: &TrialRecord| (x_of(&r.config) - 0.3).abs();
            early += log.records()[10..30].iter().map(dist).sum::<f64>() / 20.0;
            late += log.records()[40..60].iter().map(dist).sum::<f64>() / 20.0;
        }
        assert!(late < early, "early {early} late {late}");
    }

    #[test]
    fn same_seed_same_log() {
        let space = default_space(AlgorithmKind::RandomForest);
        let objective = |cfg: &PipelineConfig, _: usize| {
            let t = cfg.int("trees").unwrap() as f64;
            Ok(Evaluation {
                accuracy: 1.0 / (1.0 + (t - 100.0).abs()),
                bias: cfg.int("max_depth").unwrap() as f64 / 30.0,
            })
        };
        let init = default_config(AlgorithmKind::RandomForest);
        let a = run(
            &objective,
            &space,
            &init,
            Budget::trials(25),
            9,
            &mut FixedBeta(0.3),
            &Executor::sequential(),
        )
        .unwrap();
        let b = run(
            &objective,
            &space,
            &init,
            Budget::trials(25),
            9,
            &mut FixedBeta(0.3),
            &Executor::sequential(),
        )
        .unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = run(
            &objective,
            &space,
            &init,
            Budget::trials(25),
            10,
            &mut FixedBeta(0.3),
            &Executor::sequential(),
        )
        .unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn few_trials_fall_back_to_random() {
        let mut log = TrialLog::default();
        log.records.push(record(0, 0.9, 0.1, true));
        log.records.push(record(1, 0.8, 0.1, true));
        let (cfg, how) = suggest(&log, &line_space(), 0.5, &mut seed::rng(0), &Executor::sequential());
        assert_eq!(how, Proposal::Random);
        assert!(line_space().contains(&cfg));
    }

    #[test]
    fn best_rescoring_and_ties() {
        let mut log = TrialLog::default();
        assert!(matches!(best(&log, 0.5), Err(SmboError::NoSuccessfulTrial)));
        log.records.push(record(0, 0.70, 0.00, true));
        assert_eq!(best(&log, 0.5).unwrap().index, 0);
        log.records.push(record(1, 0.90, 0.30, true));
        log.records.push(record(2, 0.80, 0.10, true));
        log.records.push(record(3, 0.99, 0.00, false));
        // accuracy only: highest accuracy wins
        assert_eq!(best(&log, 0.0).unwrap().index, 1);
        // fairness heavy: the zero-bias trial
        assert_eq!(best(&log, 0.9).unwrap().index, 0);
        log.records.push(record(4, 0.90, 0.30, true));
        assert_eq!(best(&log, 0.0).unwrap().index, 1);
    }

    #[test]
    fn failed_trials_are_logged_not_fatal() {
        let objective = |cfg: &PipelineConfig, i: usize| {
            if i % 3 == 1 {
                Err("boom".to_string())
            } else {
                bowl(cfg, i)
            }
        };
        let log = run(
            &objective,
            &line_space(),
            &start(),
            Budget::trials(20),
            1,
            &mut FixedBeta(0.0),
            &Executor::sequential(),
        )
        .unwrap();
        assert_eq!(log.len(), 20);
        assert!(log.records().iter().any(|r| r.status == TrialStatus::Failed));
        assert!(best(&log, 0.0).unwrap().is_ok());
    }

    #[test]
    fn ndjson_round_trip() {
        let log = run(
            &bowl,
            &line_space(),
            &start(),
            Budget::trials(12),
            2,
            &mut FixedBeta(0.0),
            &Executor::sequential(),
        )
        .unwrap();
        let mut buf = Vec::new();
        log.write_ndjson(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 12);
        assert_eq!(TrialLog::read_ndjson(&text).unwrap(), log.records());
    }

    #[test]
    fn wall_clock_budget_stops() {
        let slow = |cfg: &PipelineConfig, i: usize| {
            std::thread::sleep(Duration::from_millis(20));
            bowl(cfg, i)
        };
        let budget = Budget {
            trials: None,
            seconds: Some(0.1),
        };
        let log = run(
            &slow,
            &line_space(),
            &start(),
            budget,
            1,
            &mut FixedBeta(0.0),
            &Executor::sequential(),
        )
        .unwrap();
        assert!(!log.is_empty() && log.len() < 20, "{}", log.len());
    }
}
