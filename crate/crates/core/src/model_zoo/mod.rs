//! Classifiers, preprocessing components and their hyperparameter spaces.

mod components;
mod ensemble;
mod knn;
mod logistic;
mod space;
pub mod tree;

pub use components::{rebalance_rows, top_k_width, FittedComponent};
pub use ensemble::{BoostingParams, ForestParams, GradientBoosting, MaxFeatures, RandomForest};
pub use knn::KnnModel;
pub use logistic::{sigmoid, LogisticModel, LogisticParams};
pub use space::{
    default_config, default_space, AlgorithmKind, ComponentKind, HyperparameterSpace, ParamDef, ParamDomain,
    ParamValue, PipelineConfig, Scale,
};

use crate::tabular::{DataError, Dataset, FeatureEncoder, FeatureMatrix};
use tree::{Criterion, Tree, TreeParams};

#[derive(Debug, thiserror::Error)]
pub enum ZooError {
    #[error("unknown name `{0}`")]
    UnknownName(String),
    #[error("invalid search space: {0}")]
    InvalidSpace(String),
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("value {value} outside the domain of `{name}`")]
    OutOfDomain { name: String, value: String },
    #[error("encoded feature matrix has no columns")]
    EmptyFeatures,
    #[error("numeric overflow in {0}")]
    NumericOverflow(String),
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Logistic(LogisticModel),
    Tree(Tree),
    Forest(RandomForest),
    Boosting(GradientBoosting),
    Knn(KnnModel),
}

impl FittedModel {
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        match self {
            FittedModel::Logistic(m) => m.predict_proba(x),
            FittedModel::Tree(t) => (0..x.rows()).map(|r| t.predict_row(x.row(r))).collect(),
            FittedModel::Forest(f) => f.predict_proba(x),
            FittedModel::Boosting(g) => g.predict_proba(x),
            FittedModel::Knn(k) => k.predict_proba(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub seed: u64,
    /// Training rows after any resampling component.
    pub rows: usize,
    pub encoded_width: usize,
    pub model_width: usize,
}

/// Encoder, component and classifier fitted on one training split.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    encoder: FeatureEncoder,
    component: FittedComponent,
    model: FittedModel,
    pub meta: TrainingMeta,
}

fn usize_param(cfg: &PipelineConfig, name: &str) -> Result<usize, ZooError> {
    let v = cfg.int(name)?;
    usize::try_from(v).map_err(|_| ZooError::InvalidConfig(format!("`{name}` must be non-negative, got {v}")))
}

fn bool_param(cfg: &PipelineConfig, name: &str) -> Result<bool, ZooError> {
    match cfg.cat(name)? {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(ZooError::InvalidConfig(format!(
            "`{name}` must be true/false, got {other}"
        ))),
    }
}

fn fit_model(
    cfg: &PipelineConfig,
    x: &FeatureMatrix,
    y: &[u8],
    rows: &[usize],
    seed: u64,
) -> Result<FittedModel, ZooError> {
    Ok(match cfg.algorithm {
        AlgorithmKind::LogisticRegression => FittedModel::Logistic(LogisticModel::fit(
            x,
            y,
            rows,
            LogisticParams {
                learning_rate: cfg.real("learning_rate")?,
                l2: cfg.real("l2")?,
                epochs: usize_param(cfg, "epochs")?,
            },
        )?),
        AlgorithmKind::DecisionTree => {
            let criterion = match cfg.cat("criterion")? {
                "gini" => Criterion::Gini,
                "entropy" => Criterion::Entropy,
                other => return Err(ZooError::InvalidConfig(format!("unknown criterion `{other}`"))),
            };
            let targets: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
            let params = TreeParams {
                max_depth: usize_param(cfg, "max_depth")?,
                min_leaf: usize_param(cfg, "min_leaf")?,
                criterion,
                max_features: None,
            };
            let mut rng = crate::seed::rng(seed);
            FittedModel::Tree(tree::grow_classifier(x, &targets, rows, params, &mut rng))
        }
        AlgorithmKind::RandomForest => {
            let max_features = match cfg.cat("max_features")? {
                "sqrt" => MaxFeatures::Sqrt,
                "log2" => MaxFeatures::Log2,
                "all" => MaxFeatures::All,
                other => return Err(ZooError::InvalidConfig(format!("unknown max_features `{other}`"))),
            };
            let params = ForestParams {
                trees: usize_param(cfg, "trees")?.max(1),
                max_depth: usize_param(cfg, "max_depth")?,
                max_features,
                min_leaf: usize_param(cfg, "min_leaf")?,
                bootstrap: bool_param(cfg, "bootstrap")?,
            };
            FittedModel::Forest(RandomForest::fit(x, y, rows, params, seed))
        }
        AlgorithmKind::GradientBoosting => FittedModel::Boosting(GradientBoosting::fit(
            x,
            y,
            rows,
            BoostingParams {
                stages: usize_param(cfg, "stages")?,
                learning_rate: cfg.real("learning_rate")?,
                max_depth: usize_param(cfg, "max_depth")?,
                subsample: cfg.real("subsample")?,
            },
            seed,
        )?),
        AlgorithmKind::Knn => {
            let distance = match cfg.cat("weights")? {
                "uniform" => false,
                "distance" => true,
                other => return Err(ZooError::InvalidConfig(format!("unknown weights `{other}`"))),
            };
            FittedModel::Knn(KnnModel::fit(x, y, rows, usize_param(cfg, "k")?, distance))
        }
    })
}

/// Fits encoder, component and classifier on `train`. Deterministic in (cfg, data, seed).
pub fn train(cfg: &PipelineConfig, train: &Dataset, seed: u64) -> Result<FittedPipeline, ZooError> {
    let encoder = FeatureEncoder::fit(train);
    let encoded = encoder.transform(train)?;
    if encoded.cols() == 0 {
        return Err(ZooError::EmptyFeatures);
    }
    let component = FittedComponent::fit(cfg.component, &encoded);
    let x = component.transform(&encoded);
    let y = train.labels();
    let rows: Vec<usize> = match component {
        FittedComponent::Rebalance => rebalance_rows(y),
        _ => (0..y.len()).collect(),
    };
    let model = fit_model(cfg, &x, y, &rows, seed)?;
    Ok(FittedPipeline {
        config: cfg.clone(),
        meta: TrainingMeta {
            seed,
            rows: rows.len(),
            encoded_width: encoded.cols(),
            model_width: x.cols(),
        },
        encoder,
        component,
        model,
    })
}

impl FittedPipeline {
    /// Encoded and component-transformed features for `ds`.
    pub fn features(&self, ds: &Dataset) -> Result<FeatureMatrix, ZooError> {
        Ok(self.component.transform(&self.encoder.transform(ds)?))
    }

    pub fn predict_proba(&self, ds: &Dataset) -> Result<Vec<f64>, ZooError> {
        Ok(self.model.predict_proba(&self.features(ds)?))
    }

    /// One 0/1 label per row; a score of exactly 0.5 maps to the favorable label.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<u8>, ZooError> {
        Ok(self
            .predict_proba(ds)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }

    pub fn model(&self) -> &FittedModel {
        &self.model
    }

    pub fn component(&self) -> &FittedComponent {
        &self.component
    }
}
