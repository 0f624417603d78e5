//! Accuracy and group-fairness metrics.
//!
//! Raw metrics follow the usual definitions with `z = 0` as the unprivileged
//! group. Bias scores fold every metric onto `[0, ∞)` so that 0 means fair:
//! `|ln DI|` for disparate impact and absolute values for the differences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Score assigned to a disparate impact whose privileged rate is zero.
pub const DEFAULT_DI_CAP: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("empty label vector")]
    Empty,
    #[error("protected group z={0} is empty")]
    EmptyGroup(u8),
    #[error("{kind} is undefined: no rows with y={label} in group z={group}")]
    UndefinedRate { kind: MetricKind, label: u8, group: u8 },
    #[error("disparate impact {0} is not positive")]
    NonPositiveDi(f64),
    #[error("unknown metric `{0}` (expected di, spd, eod or aod)")]
    UnknownKind(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Di,
    Spd,
    Eod,
    Aod,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [MetricKind::Di, MetricKind::Spd, MetricKind::Eod, MetricKind::Aod];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::Di => "di",
            MetricKind::Spd => "spd",
            MetricKind::Eod => "eod",
            MetricKind::Aod => "aod",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| MetricError::UnknownKind(s.to_owned()))
    }
}

pub fn accuracy(y: &[u8], y_hat: &[u8]) -> Result<f64, MetricError> {
    if y.len() != y_hat.len() {
        return Err(MetricError::LengthMismatch(format!(
            "{} labels vs {} predictions",
            y.len(),
            y_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(MetricError::Empty);
    }
    let hits = y.iter().zip(y_hat).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / y.len() as f64)
}

/// Confusion counts split by protected group: `cells[z][y][y_hat]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GroupCounts {
    cells: [[[u64; 2]; 2]; 2],
}

impl GroupCounts {
    pub fn from_labels(y: &[u8], y_hat: &[u8], z: &[u8]) -> Result<Self, MetricError> {
        if y.len() != y_hat.len() || y.len() != z.len() {
            return Err(MetricError::LengthMismatch(format!(
                "y={}, y_hat={}, z={}",
                y.len(),
                y_hat.len(),
                z.len()
            )));
        }
        if y.is_empty() {
            return Err(MetricError::Empty);
        }
        let mut counts = GroupCounts::default();
        for ((&yi, &pi), &zi) in y.iter().zip(y_hat).zip(z) {
            counts.cells[usize::from(zi != 0)][usize::from(yi != 0)][usize::from(pi != 0)] += 1;
        }
        for group in 0..2u8 {
            if counts.group_total(group) == 0 {
                return Err(MetricError::EmptyGroup(group));
            }
        }
        Ok(counts)
    }

    pub fn cell(&self, z: u8, y: u8, y_hat: u8) -> u64 {
        self.cells[z as usize][y as usize][y_hat as usize]
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().flatten().sum()
    }

    pub fn group_total(&self, z: u8) -> u64 {
        self.cells[z as usize].iter().flatten().sum()
    }

    /// Pr[ŷ = 1 | z].
    pub fn positive_rate(&self, z: u8) -> f64 {
        let g = &self.cells[z as usize];
        (g[0][1] + g[1][1]) as f64 / self.group_total(z) as f64
    }

    /// Pr[ŷ = 1 | y, z], or `None` when no row has that (y, z).
    pub fn conditional_rate(&self, y: u8, z: u8) -> Option<f64> {
        let row = self.cells[z as usize][y as usize];
        let n = row[0] + row[1];
        (n > 0).then(|| row[1] as f64 / n as f64)
    }
}

/// A raw metric value, or one of the two disparate-impact edge cases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RawMetric {
    Value(f64),
    /// Privileged positive rate is 0 while the unprivileged one is not.
    InfiniteDi,
    /// Both positive rates are 0.
    BothRatesZero,
}

impl RawMetric {
    pub fn value(self) -> Option<f64> {
        match self {
            RawMetric::Value(v) => Some(v),
            _ => None,
        }
    }
}

fn rate(kind: MetricKind, c: &GroupCounts, y: u8, z: u8) -> Result<f64, MetricError> {
    c.conditional_rate(y, z).ok_or(MetricError::UndefinedRate {
        kind,
        label: y,
        group: z,
    })
}

pub fn raw_metric(kind: MetricKind, c: &GroupCounts) -> Result<RawMetric, MetricError> {
    let value = match kind {
        MetricKind::Di => {
            let unpriv = c.positive_rate(0);
            let priv_ = c.positive_rate(1);
            if priv_ == 0.0 {
                return Ok(if unpriv == 0.0 {
                    RawMetric::BothRatesZero
                } else {
                    RawMetric::InfiniteDi
                });
            }
            unpriv / priv_
        }
        MetricKind::Spd => c.positive_rate(0) - c.positive_rate(1),
        MetricKind::Eod => rate(kind, c, 1, 0)? - rate(kind, c, 1, 1)?,
        MetricKind::Aod => {
            let tpr_gap = rate(kind, c, 1, 0)? - rate(kind, c, 1, 1)?;
            let fpr_gap = rate(kind, c, 0, 0)? - rate(kind, c, 0, 1)?;
            0.5 * (fpr_gap.abs() + tpr_gap.abs())
        }
    };
    Ok(RawMetric::Value(value))
}

/// Non-negative bias score; 0 is perfectly fair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasScore {
    pub value: f64,
    pub kind: MetricKind,
}

pub fn bias_score(kind: MetricKind, raw: RawMetric, di_cap: f64) -> Result<BiasScore, MetricError> {
    let value = match raw {
        RawMetric::BothRatesZero => 0.0,
        RawMetric::InfiniteDi => di_cap,
        RawMetric::Value(v) => match kind {
            MetricKind::Di if v <= 0.0 => return Err(MetricError::NonPositiveDi(v)),
            MetricKind::Di => v.ln().abs(),
            MetricKind::Spd | MetricKind::Eod => v.abs(),
            MetricKind::Aod => v,
        },
    };
    Ok(BiasScore { value, kind })
}

/// Bias scorer for one metric with a fixed infinite-DI cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasScorer {
    pub kind: MetricKind,
    pub di_cap: f64,
}

impl BiasScorer {
    pub fn new(kind: MetricKind) -> Self {
        Self {
            kind,
            di_cap: DEFAULT_DI_CAP,
        }
    }

    /// Bias score of `y_hat`. A zero disparate impact (no unprivileged
    /// positives) is scored like an infinite one, at the cap, since
    /// `|ln DI|` diverges either way.
    pub fn score(&self, y: &[u8], y_hat: &[u8], z: &[u8]) -> Result<BiasScore, MetricError> {
        let counts = GroupCounts::from_labels(y, y_hat, z)?;
        let raw = match raw_metric(self.kind, &counts)? {
            RawMetric::Value(v) if self.kind == MetricKind::Di && v == 0.0 => RawMetric::InfiniteDi,
            raw => raw,
        };
        bias_score(self.kind, raw, self.di_cap)
    }

    /// (accuracy, bias score) of `y_hat`.
    pub fn evaluate(&self, y: &[u8], y_hat: &[u8], z: &[u8]) -> Result<(f64, f64), MetricError> {
        Ok((accuracy(y, y_hat)?, self.score(y, y_hat, z)?.value))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(kind: MetricKind, y: &[u8], y_hat: &[u8], z: &[u8]) -> RawMetric {
        raw_metric(kind, &GroupCounts::from_labels(y, y_hat, z).unwrap()).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0, 1, 0], &[1, 1, 1, 1]).unwrap(), 0.5);
        assert_eq!(accuracy(&[0], &[1]).unwrap(), 0.0);
        assert!(matches!(accuracy(&[0], &[1, 0]), Err(MetricError::LengthMismatch(_))));
        assert!(matches!(accuracy(&[], &[]), Err(MetricError::Empty)));
    }

    #[test]
    fn rates_half_vs_quarter() {
        // z=0: 2 of 4 predicted positive; z=1: 1 of 4.
        let z = [0, 0, 0, 0, 1, 1, 1, 1];
        let y_hat = [1, 1, 0, 0, 1, 0, 0, 0];
        let y = [1, 0, 1, 0, 1, 0, 1, 0];
        assert_eq!(raw(MetricKind::Di, &y, &y_hat, &z), RawMetric::Value(2.0));
        assert_eq!(raw(MetricKind::Spd, &y, &y_hat, &z), RawMetric::Value(0.25));
    }

    #[test]
    fn constant_predictions_are_fair() {
        let y = [1, 0, 1, 0, 1, 1];
        let z = [0, 0, 0, 1, 1, 1];
        for fill in [0u8, 1] {
            let y_hat = [fill; 6];
            for kind in MetricKind::ALL {
                let r = raw(kind, &y, &y_hat, &z);
                assert_eq!(
                    bias_score(kind, r, DEFAULT_DI_CAP).unwrap().value,
                    0.0,
                    "{kind} fill={fill}"
                );
            }
        }
        assert_eq!(raw(MetricKind::Di, &y, &[1; 6], &z), RawMetric::Value(1.0));
        assert_eq!(raw(MetricKind::Di, &y, &[0; 6], &z), RawMetric::BothRatesZero);
    }

    #[test]
    fn eod_aod_hand_counted() {
        let y = [1, 1, 0, 0, 1, 1, 0, 0];
        let z = [0, 0, 0, 0, 1, 1, 1, 1];
        let y_hat = [1, 0, 0, 0, 1, 1, 1, 0];
        let c = GroupCounts::from_labels(&y, &y_hat, &z).unwrap();
        assert_eq!(c.conditional_rate(1, 0), Some(0.5));
        assert_eq!(c.conditional_rate(1, 1), Some(1.0));
        assert_eq!(c.conditional_rate(0, 0), Some(0.0));
        assert_eq!(c.conditional_rate(0, 1), Some(0.5));
        assert_eq!(raw_metric(MetricKind::Eod, &c).unwrap(), RawMetric::Value(-0.5));
        assert_eq!(raw_metric(MetricKind::Aod, &c).unwrap(), RawMetric::Value(0.5));
    }

    #[test]
    fn bias_score_normalisation() {
        let s = bias_score(MetricKind::Di, RawMetric::Value(2.0), DEFAULT_DI_CAP).unwrap();
        assert!((s.value - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(
            bias_score(MetricKind::Di, RawMetric::Value(1.0), 5.0).unwrap().value,
            0.0
        );
        assert_eq!(
            bias_score(MetricKind::Spd, RawMetric::Value(-0.25), 5.0).unwrap().value,
            0.25
        );
        assert_eq!(
            bias_score(MetricKind::Di, RawMetric::InfiniteDi, 3.0).unwrap().value,
            3.0
        );
        assert!(matches!(
            bias_score(MetricKind::Di, RawMetric::Value(0.0), 5.0),
            Err(MetricError::NonPositiveDi(_))
        ));
    }

    #[test]
    fn scorer_caps_zero_di() {
        let z = [0, 0, 1, 1];
        let scorer = BiasScorer::new(MetricKind::Di);
        assert_eq!(
            scorer.score(&[1, 0, 1, 0], &[0, 0, 1, 0], &z).unwrap().value,
            DEFAULT_DI_CAP
        );
        assert_eq!(
            scorer.score(&[1, 0, 1, 0], &[1, 0, 0, 0], &z).unwrap().value,
            DEFAULT_DI_CAP
        );
        assert_eq!(scorer.score(&[1, 0, 1, 0], &[0, 0, 0, 0], &z).unwrap().value, 0.0);
    }

    #[test]
    fn infinite_di_and_undefined_rates() {
        let z = [0, 0, 1, 1];
        assert_eq!(
            raw(MetricKind::Di, &[1, 0, 1, 0], &[1, 0, 0, 0], &z),
            RawMetric::InfiniteDi
        );
        // no positives in z=1
        let c = GroupCounts::from_labels(&[1, 0, 0, 0], &[1, 0, 0, 0], &z).unwrap();
        assert!(matches!(
            raw_metric(MetricKind::Eod, &c),
            Err(MetricError::UndefinedRate { label: 1, group: 1, .. })
        ));
        assert!(matches!(
            GroupCounts::from_labels(&[1, 0], &[1, 0], &[1, 1]),
            Err(MetricError::EmptyGroup(0))
        ));
    }

    #[test]
    fn kind_strings() {
        for kind in MetricKind::ALL {
            assert_eq!(kind.as_str().parse::<MetricKind>().unwrap(), kind);
            assert_eq!(serde_json::to_string(&kind).unwrap(), format!("\"{kind}\""));
        }
        assert!("DI".parse::<MetricKind>().is_err());
    }
}
