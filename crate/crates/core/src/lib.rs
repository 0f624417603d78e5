//! Fairness-aware hyperparameter search for repairing biased binary classifiers.
//!
//! The crate is organised bottom-up:
//!
//! - [`tabular`]: CSV ingestion, one-hot encoding, splits and data characteristics.
//! - [`metrics`]: accuracy and the four group-fairness metrics, normalised to bias scores.
//! - [`model_zoo`]: native classifiers, preprocessing components and their search spaces.
//! - [`fairea`]: the mutation baseline and the five trade-off regions.
//! - [`repair`]: cost scalarisation, the adaptive fairness weight and repair orchestration.
//! - [`smbo`]: the tree-surrogate sequential model-based optimiser.
//! - [`prune_db`]: offline search-space database building and online input matching.
//!
//! Data-parallel loops go through [`exec::Executor`]. With the `parallel` feature
//! (on by default) they run on a rayon pool; without it everything is sequential.
//! Results never depend on the worker count.

pub mod digest;
pub mod exec;
pub mod fairea;
pub mod metrics;
pub mod model_zoo;
pub mod prune_db;
pub mod repair;
pub mod seed;
pub mod smbo;
pub mod synthetic;
pub mod tabular;

pub use exec::Executor;
pub use fairea::{TradeoffBaseline, TradeoffPoint, TradeoffRegion};
pub use metrics::{BiasScore, MetricKind};
pub use model_zoo::{AlgorithmKind, ComponentKind, FittedPipeline, HyperparameterSpace, PipelineConfig};
pub use prune_db::{Database, DatabaseEntry};
pub use repair::{repair, RepairConfig, RepairError, RepairResult};
pub use tabular::{Dataset, Schema};
