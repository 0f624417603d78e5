use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::seed;
use crate::tabular::FeatureMatrix;

use super::logistic::sigmoid;
use super::tree::{self, Criterion, Tree, TreeParams};
use super::ZooError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    pub fn count(self, width: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (width as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (width as f64).log2().floor() as usize,
            MaxFeatures::All => width,
        };
        k.clamp(1, width.max(1))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub max_features: MaxFeatures,
    pub min_leaf: usize,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

impl RandomForest {
    /// Tree `t` draws from its own stream derived from `seed`, so the
    /// ensemble does not depend on build order.
    pub fn fit(x: &FeatureMatrix, y: &[u8], rows: &[usize], params: ForestParams, seed: u64) -> Self {
        let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            criterion: Criterion::Gini,
            max_features: Some(params.max_features.count(x.cols())),
        };
        let trees = (0..params.trees)
            .map(|t| {
                let mut rng = seed::rng(seed::derive(seed, 0x7265_6573, t as u64));
                let sample: Vec<usize> = if params.bootstrap {
                    (0..rows.len()).map(|_| rows[rng.gen_range(0..rows.len())]).collect()
                } else {
                    rows.to_vec()
                };
                tree::grow_classifier(x, &targets, &sample, tree_params, &mut rng)
            })
            .collect();
        Self { trees }
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        let k = self.trees.len() as f64;
        (0..x.rows())
            .map(|r| self.trees.iter().map(|t| t.predict_row(x.row(r))).sum::<f64>() / k)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoostingParams {
    pub stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub subsample: f64,
}

/// Gradient boosting on the logistic loss with Newton-step leaf values.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBoosting {
    init: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
}

impl GradientBoosting {
    pub fn fit(
        x: &FeatureMatrix,
        y: &[u8],
        rows: &[usize],
        params: BoostingParams,
        seed: u64,
    ) -> Result<Self, ZooError> {
        let n = rows.len();
        let targets: Vec<f64> = rows.iter().map(|&r| f64::from(y[r])).collect();
        let local = x.select_rows(rows);
        let prior = (targets.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let init = (prior / (1.0 - prior)).ln();
        let mut scores = vec![init; n];
        let mut residual = vec![0.0; n];
        let mut hessian = vec![0.0; n];
        let m = ((params.subsample * n as f64).round() as usize).clamp(1, n);
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: 1,
            criterion: Criterion::SquaredError,
            max_features: None,
        };
        let mut rng = seed::rng(seed::derive(seed, 0x0067_626d, 0));
        let mut trees = Vec::with_capacity(params.stages);
        for _ in 0..params.stages {
            for i in 0..n {
                let p = sigmoid(scores[i]);
                residual[i] = targets[i] - p;
                hessian[i] = p * (1.0 - p);
            }
            let chosen: Vec<usize> = if m < n {
                let mut s = sample_indices(&mut rng, n, m).into_vec();
                s.sort_unstable();
                s
            } else {
                (0..n).collect()
            };
            let tree = tree::grow(&local, &residual, &chosen, tree_params, &mut rng, |leaf| {
                let g: f64 = leaf.iter().map(|&i| residual[i]).sum();
                let h: f64 = leaf.iter().map(|&i| hessian[i]).sum();
                if h > 1e-12 {
                    g / h
                } else {
                    0.0
                }
            });
            for (i, s) in scores.iter_mut().enumerate() {
                *s += params.learning_rate * tree.predict_row(local.row(i));
            }
            if scores.iter().any(|s| !s.is_finite()) {
                return Err(ZooError::NumericOverflow("gradient boosting scores".into()));
            }
            trees.push(tree);
        }
        Ok(Self {
            init,
            learning_rate: params.learning_rate,
            trees,
        })
    }

    pub fn logit(&self, row: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.rows()).map(|r| sigmoid(self.logit(x.row(r)))).collect()
    }

    pub fn stages(&self) -> usize {
        self.trees.len()
    }
}
