//! Mutation baseline for fairness/accuracy trade-offs.
//!
//! The original model's validation predictions are progressively overwritten
//! with a constant label. Each mutation degree yields a (bias, accuracy)
//! point; the polyline through them is what a mitigation has to beat.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exec::Executor;
use crate::metrics::{BiasScorer, MetricError, MetricKind};
use crate::model_zoo::{FittedPipeline, ZooError};
use crate::repair::pseudo_accuracy;
use crate::seed;
use crate::tabular::Dataset;

pub const DEFAULT_REPETITIONS: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum FaireaError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Model(#[from] ZooError),
    #[error("mutation degrees must be strictly increasing in (0, 1] and end at 1.0")]
    InvalidDegrees,
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("unknown region `{0}`")]
    UnknownRegion(String),
}

/// `{0.1, 0.2, …, 1.0}`.
pub fn default_degrees() -> Vec<f64> {
    (1..=10).map(|i| f64::from(i) / 10.0).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub bias: f64,
    pub acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreePoint {
    pub degree: f64,
    pub bias: f64,
    pub acc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffBaseline {
    pub metric: MetricKind,
    pub original: TradeoffPoint,
    pub a0: f64,
    pub points: Vec<DegreePoint>,
    pub repetitions: usize,
    pub seed: u64,
    pub replacement: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TradeoffRegion {
    #[serde(rename = "lose")]
    Lose,
    #[serde(rename = "bad")]
    Bad,
    #[serde(rename = "inv")]
    Inverted,
    #[serde(rename = "good")]
    Good,
    #[serde(rename = "win")]
    Win,
}

impl TradeoffRegion {
    pub const ALL: [TradeoffRegion; 5] = [
        TradeoffRegion::Lose,
        TradeoffRegion::Bad,
        TradeoffRegion::Inverted,
        TradeoffRegion::Good,
        TradeoffRegion::Win,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TradeoffRegion::Lose => "lose",
            TradeoffRegion::Bad => "bad",
            TradeoffRegion::Inverted => "inv",
            TradeoffRegion::Good => "good",
            TradeoffRegion::Win => "win",
        }
    }

    /// Good and win count as a successful repair.
    pub fn is_success(self) -> bool {
        matches!(self, TradeoffRegion::Good | TradeoffRegion::Win)
    }
}

impl fmt::Display for TradeoffRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TradeoffRegion {
    type Err = FaireaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TradeoffRegion::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| FaireaError::UnknownRegion(s.to_owned()))
    }
}

/// Overwrites exactly `round(degree * n)` uniformly chosen positions with `replacement`.
pub fn mutate_predictions<R: Rng + ?Sized>(y_hat: &[u8], degree: f64, replacement: u8, rng: &mut R) -> Vec<u8> {
    let n = y_hat.len();
    let k = ((degree.clamp(0.0, 1.0) * n as f64).round() as usize).min(n);
    let mut out = y_hat.to_vec();
    for i in sample_indices(rng, n, k) {
        out[i] = replacement;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSpec {
    pub scorer: BiasScorer,
    pub degrees: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
}

impl BaselineSpec {
    pub fn new(kind: MetricKind, seed: u64) -> Self {
        Self {
            scorer: BiasScorer::new(kind),
            degrees: default_degrees(),
            repetitions: DEFAULT_REPETITIONS,
            seed,
        }
    }

    fn validate(&self) -> Result<(), FaireaError> {
        if self.repetitions == 0 {
            return Err(FaireaError::NoRepetitions);
        }
        let increasing = self.degrees.windows(2).all(|w| w[0] < w[1]);
        let in_range = self.degrees.iter().all(|&d| d > 0.0 && d <= 1.0);
        if !increasing || !in_range || self.degrees.last() != Some(&1.0) {
            return Err(FaireaError::InvalidDegrees);
        }
        Ok(())
    }
}

/// Baseline from the original model's validation predictions.
///
/// Degrees below 1.0 average `repetitions` independent mutations; the 1.0
/// point is set to (0, a0) directly.
pub fn build_baseline(
    y_hat: &[u8],
    val: &Dataset,
    replacement: u8,
    spec: &BaselineSpec,
    exec: &Executor,
) -> Result<TradeoffBaseline, FaireaError> {
    spec.validate()?;
    let (y, z) = (val.labels(), val.protected());
    let (acc, bias) = spec.scorer.evaluate(y, y_hat, z)?;
    let a0 = pseudo_accuracy(y);
    let reps = spec.repetitions;
    let sampled = spec.degrees.len() - 1;
    let results = exec.map(sampled * reps, |job| {
        let degree = spec.degrees[job / reps];
        let mut rng = seed::derived_rng(spec.seed, seed::STREAM_BASELINE, job as u64);
        let mutated = mutate_predictions(y_hat, degree, replacement, &mut rng);
        spec.scorer.evaluate(y, &mutated, z)
    });
    let mut points = Vec::with_capacity(spec.degrees.len());
    for (d, chunk) in results.chunks(reps).enumerate() {
        let (mut sum_acc, mut sum_bias) = (0.0, 0.0);
        for r in chunk {
            let (a, b) = r.clone()?;
            sum_acc += a;
            sum_bias += b;
        }
        points.push(DegreePoint {
            degree: spec.degrees[d],
            bias: sum_bias / reps as f64,
            acc: sum_acc / reps as f64,
        });
    }
    points.push(DegreePoint {
        degree: 1.0,
        bias: 0.0,
        acc: a0,
    });
    Ok(TradeoffBaseline {
        metric: spec.scorer.kind,
        original: TradeoffPoint { bias, acc },
        a0,
        points,
        repetitions: reps,
        seed: spec.seed,
        replacement,
    })
}

/// Baseline for a fitted model; the replacement label is the training majority.
pub fn build_baseline_for(
    fp: &FittedPipeline,
    train: &Dataset,
    val: &Dataset,
    spec: &BaselineSpec,
    exec: &Executor,
) -> Result<TradeoffBaseline, FaireaError> {
    let y_hat = fp.predict(val)?;
    build_baseline(&y_hat, val, train.majority_label(), spec, exec)
}

impl TradeoffBaseline {
    /// Baseline accuracy at `bias`, interpolating linearly between vertices
    /// sorted by bias and clamping outside their range.
    pub fn accuracy_at(&self, bias: f64) -> f64 {
        let mut vertices: Vec<(f64, f64)> = std::iter::once((self.original.bias, self.original.acc))
            .chain(self.points.iter().map(|p| (p.bias, p.acc)))
            .collect();
        vertices.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (first, last) = (vertices[0], vertices[vertices.len() - 1]);
        if bias <= first.0 {
            return first.1;
        }
        if bias >= last.0 {
            return last.1;
        }
        for w in vertices.windows(2) {
            let ((b0, a0), (b1, a1)) = (w[0], w[1]);
            if bias >= b0 && bias <= b1 {
                if b1 == b0 {
                    return a0.max(a1);
                }
                return a0 + (a1 - a0) * (bias - b0) / (b1 - b0);
            }
        }
        last.1
    }

    pub fn classify(&self, candidate: TradeoffPoint) -> TradeoffRegion {
        classify_region(self, candidate)
    }
}

pub fn classify_region(baseline: &TradeoffBaseline, candidate: TradeoffPoint) -> TradeoffRegion {
    let original = baseline.original;
    let acc_up = candidate.acc > original.acc;
    let bias_down = candidate.bias < original.bias;
    let bias_up = candidate.bias > original.bias;
    match (acc_up, bias_down, bias_up) {
        (true, true, _) => TradeoffRegion::Win,
        (true, false, _) => TradeoffRegion::Inverted,
        (false, _, true) => TradeoffRegion::Lose,
        (false, false, false) => TradeoffRegion::Bad,
        (false, true, false) => {
            if candidate.acc > baseline.accuracy_at(candidate.bias) {
                TradeoffRegion::Good
            } else {
                TradeoffRegion::Bad
            }
        }
    }
}
