//! Synthetic biased dataset for tests, benchmarks and demos.
//!
//! Two informative features and a binary protected attribute `group`. The
//! label thresholds differ by group so that positive rates are
//! `0.5 ± disparity / 2`, and `x2` leaks the group, which lets a classifier
//! that never sees `group` still reproduce the disparity.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::seed;
use crate::tabular::{load_csv_reader, DataError, Dataset, Schema};

/// Standard deviation of the latent score `x1 + u + noise`.
const SCORE_SD: f64 = 1.5;
const NOISE_SD: f64 = 0.5;
/// How far `x2` shifts between groups.
const LEAK: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub rows: usize,
    /// Gap in favorable-label rates between the groups.
    pub disparity: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            rows: 2000,
            disparity: 0.3,
            seed: 0,
        }
    }
}

pub fn schema() -> Schema {
    Schema::new("label", "1", "group", "0")
}

/// CSV text with columns `x1,x2,group,label`.
pub fn csv(cfg: &SyntheticConfig) -> String {
    let mut rng = seed::rng(cfg.seed);
    let std = Normal::standard();
    let threshold = |rate: f64| SCORE_SD * std.inverse_cdf(1.0 - rate);
    let t = [
        threshold(0.5 - cfg.disparity / 2.0),
        threshold(0.5 + cfg.disparity / 2.0),
    ];
    let mut out = String::from("x1,x2,group,label\n");
    for _ in 0..cfg.rows {
        let z = usize::from(rng.gen_bool(0.5));
        let x1: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.sample(StandardNormal);
        let noise: f64 = rng.sample::<f64, _>(StandardNormal) * NOISE_SD;
        let x2 = u + LEAK * (z as f64 - 0.5);
        let y = u8::from(x1 + u + noise > t[z]);
        writeln!(out, "{x1},{x2},{z},{y}").expect("write to string");
    }
    out
}

pub fn generate(cfg: &SyntheticConfig) -> Result<Dataset, DataError> {
    load_csv_reader(csv(cfg).as_bytes(), &schema(), "synthetic")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_rates_follow_disparity() {
        let ds = generate(&SyntheticConfig {
            rows: 20_000,
            ..SyntheticConfig::default()
        })
        .unwrap();
        let rate = |g: u8| {
            let (mut pos, mut n) = (0.0, 0.0);
            for (&y, &z) in ds.labels().iter().zip(ds.protected()) {
                if z == g {
                    n += 1.0;
                    pos += f64::from(y);
                }
            }
            pos / n
        };
        let gap = rate(1) - rate(0);
        assert!((gap - 0.3).abs() < 0.03, "{gap}");
        assert_eq!(ds.feature_names(), ["x1", "x2"]);
    }

    #[test]
    fn same_seed_same_rows() {
        let cfg = SyntheticConfig::default();
        assert_eq!(csv(&cfg), csv(&cfg));
        assert_ne!(csv(&cfg), csv(&SyntheticConfig { seed: 1, ..cfg }));
    }
}
