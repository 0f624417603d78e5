//! Offline database of pruned search spaces and online input matching.
//!
//! Building runs repair several times on a corpus input, keeps the best
//! pipelines of each run and shrinks the search space to what they used.
//! Matching picks the entry of the most similar input so a new repair can
//! start from that smaller space.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::exec::Executor;
use crate::model_zoo::{
    default_space, AlgorithmKind, ComponentKind, HyperparameterSpace, ParamDomain, ParamValue, PipelineConfig,
};
use crate::repair::{repair_with, RepairConfig, RepairError};
use crate::seed;
use crate::smbo::Budget;
use crate::tabular::{characteristics, DataCharacteristics, Dataset};

pub const VERSION: &str = "fairfix-db/1";
pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_TOP_M: usize = 3;
pub const DEFAULT_DEV: f64 = 1.0;

#[derive(Debug, thiserror::Error)]
pub enum DbError {
    #[error("unrecognised database version {0:?}")]
    UnknownVersion(Option<String>),
    #[error("malformed database entry {0}")]
    MalformedEntry(usize),
    #[error("malformed database: {0}")]
    Malformed(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Observed range of a numeric hyperparameter after outlier removal.
///
/// Values at distance `dev * sigma` or more from the mean (population
/// statistics) are dropped. If nothing survives, the full observed range is
/// returned.
pub fn prune_numeric(values: &[f64], dev: f64) -> (f64, f64) {
    assert!(!values.is_empty(), "prune_numeric needs at least one value");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sigma = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    let range = |it: &mut dyn Iterator<Item = f64>| {
        it.fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    };
    range(&mut values.iter().copied().filter(|v| (v - mean).abs() < dev * sigma))
        .or_else(|| range(&mut values.iter().copied()))
        .expect("non-empty")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamRange {
    Categorical { values: Vec<String> },
    Numeric { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatabaseEntry {
    pub dataset: String,
    pub p: usize,
    pub f: usize,
    pub protected: String,
    #[serde(rename = "L")]
    pub lower_bound: f64,
    pub algorithm: AlgorithmKind,
    pub components: Vec<ComponentKind>,
    pub params: BTreeMap<String, ParamRange>,
}

impl DatabaseEntry {
    fn validate(&self) -> bool {
        let default = default_space(self.algorithm);
        !self.components.is_empty()
            && self.lower_bound.is_finite()
            && self.params.iter().all(|(name, range)| {
                default.param(name).is_some()
                    && match range {
                        ParamRange::Categorical { values } => !values.is_empty(),
                        ParamRange::Numeric { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
                    }
            })
    }

    /// The algorithm's default space narrowed to this entry.
    ///
    /// Ranges are intersected with the default ones; a parameter whose
    /// intersection is empty keeps its default domain.
    pub fn space(&self) -> HyperparameterSpace {
        let mut space = default_space(self.algorithm);
        space.components = self.components.clone();
        for def in &mut space.params {
            let Some(range) = self.params.get(&def.name) else {
                continue;
            };
            match (&mut def.domain, range) {
                (ParamDomain::Categorical { values }, ParamRange::Categorical { values: keep }) => {
                    let narrowed: Vec<String> = values.iter().filter(|v| keep.contains(v)).cloned().collect();
                    if !narrowed.is_empty() {
                        *values = narrowed;
                    }
                }
                (ParamDomain::Integer { lo, hi, .. }, ParamRange::Numeric { lo: a, hi: b }) => {
                    let (new_lo, new_hi) = ((*lo).max(a.ceil() as i64), (*hi).min(b.floor() as i64));
                    if new_lo <= new_hi {
                        (*lo, *hi) = (new_lo, new_hi);
                    }
                }
                (ParamDomain::Real { lo, hi, .. }, ParamRange::Numeric { lo: a, hi: b }) => {
                    let (new_lo, new_hi) = (lo.max(*a), hi.min(*b));
                    if new_lo <= new_hi {
                        (*lo, *hi) = (new_lo, new_hi);
                    }
                }
                _ => {}
            }
        }
        space
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildProvenance {
    pub runs: usize,
    pub trials: Option<usize>,
    pub seconds: Option<f64>,
    pub top_k: usize,
    pub top_m: usize,
    pub dev: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub provenance: BuildProvenance,
    pub entries: Vec<DatabaseEntry>,
}

#[derive(Serialize)]
struct DatabaseFile<'a> {
    version: &'static str,
    provenance: &'a BuildProvenance,
    entries: &'a [DatabaseEntry],
}

impl Database {
    pub fn new(provenance: BuildProvenance) -> Self {
        Self {
            provenance,
            entries: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = DatabaseFile {
            version: VERSION,
            provenance: &self.provenance,
            entries: &self.entries,
        };
        let mut text = serde_json::to_string_pretty(&file).expect("database serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, DbError> {
        let mut root: serde_json::Value = serde_json::from_str(text)?;
        let obj = root
            .as_object_mut()
            .ok_or_else(|| DbError::Malformed("top level must be an object".into()))?;
        match obj.get("version") {
            Some(serde_json::Value::String(v)) if v == VERSION => {}
            Some(serde_json::Value::String(v)) => return Err(DbError::UnknownVersion(Some(v.clone()))),
            _ => return Err(DbError::UnknownVersion(None)),
        }
        let provenance = obj
            .remove("provenance")
            .ok_or_else(|| DbError::Malformed("missing provenance".into()))?;
        let provenance: BuildProvenance =
            serde_json::from_value(provenance).map_err(|e| DbError::Malformed(format!("provenance: {e}")))?;
        let entries = match obj.remove("entries") {
            Some(serde_json::Value::Array(items)) => items,
            _ => return Err(DbError::Malformed("missing entries array".into())),
        };
        let entries = entries
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                serde_json::from_value::<DatabaseEntry>(v)
                    .ok()
                    .filter(DatabaseEntry::validate)
                    .ok_or(DbError::MalformedEntry(i))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { provenance, entries })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DbError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DbError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Settings for building one database entry.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildConfig {
    pub runs: usize,
    pub top_k: usize,
    pub top_m: usize,
    pub dev: f64,
    /// Per-run repair settings; each run replaces the seed with a derived one.
    pub repair: RepairConfig,
}

impl BuildConfig {
    pub fn provenance(&self) -> BuildProvenance {
        let Budget { trials, seconds } = self.repair.budget;
        BuildProvenance {
            runs: self.runs,
            trials,
            seconds,
            top_k: self.top_k,
            top_m: self.top_m,
            dev: self.dev,
            seed: self.repair.seed,
        }
    }
}

/// Best pipelines from `runs` independent repairs, plus the lower bound
/// measured in the first run.
///
/// Each run contributes its `top_k` lowest-cost ok trials, scored at that
/// run's final weight; cost ties go to the earlier trial.
pub fn top_pipelines(
    ds: &Dataset,
    algorithm: AlgorithmKind,
    cfg: &BuildConfig,
    exec: &Executor,
) -> Result<(Vec<PipelineConfig>, f64), RepairError> {
    if cfg.runs == 0 || cfg.top_k == 0 || cfg.top_m == 0 || cfg.dev.is_nan() || cfg.dev <= 0.0 {
        return Err(RepairError::InvalidConfig(
            "runs, top-k and top-m must be positive and dev > 0".into(),
        ));
    }
    let inner = Executor::sequential();
    let runs = exec.map(cfg.runs, |run| {
        let mut rc = cfg.repair.clone();
        rc.seed = seed::derive(cfg.repair.seed, seed::STREAM_DB_RUN, run as u64);
        repair_with(ds, algorithm, &rc, None, &inner)
    });
    let mut lower_bound = None;
    let mut picked = Vec::new();
    for result in runs {
        let result = result?;
        lower_bound.get_or_insert(result.lower_bound.value);
        let beta = result.beta.beta;
        let mut ok: Vec<_> = result
            .log
            .ok_records()
            .map(|r| (r.cost_at(beta).expect("ok record"), r.index, r.config.clone()))
            .collect();
        ok.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        picked.extend(ok.into_iter().take(cfg.top_k).map(|(_, _, c)| c));
    }
    Ok((picked, lower_bound.expect("at least one run")))
}

/// Components and parameter ranges used by `pipelines`.
///
/// The `top_m` most frequent components are kept, ties in enum order.
/// Categorical parameters keep every observed value; numeric ones keep the
/// observed range after [`prune_numeric`].
pub fn condense(
    pipelines: &[PipelineConfig],
    algorithm: AlgorithmKind,
    top_m: usize,
    dev: f64,
) -> (Vec<ComponentKind>, BTreeMap<String, ParamRange>) {
    let mut counts = [0usize; ComponentKind::ALL.len()];
    for c in pipelines {
        counts[c.component.index()] += 1;
    }
    let mut ranked: Vec<ComponentKind> = ComponentKind::ALL
        .into_iter()
        .filter(|k| counts[k.index()] > 0)
        .collect();
    // stable sort keeps enum order among equal counts
    ranked.sort_by(|a, b| counts[b.index()].cmp(&counts[a.index()]));
    ranked.truncate(top_m);

    let mut params = BTreeMap::new();
    for def in &default_space(algorithm).params {
        let observed: Vec<&ParamValue> = pipelines.iter().filter_map(|c| c.params.get(&def.name)).collect();
        if observed.is_empty() {
            continue;
        }
        let range = match &def.domain {
            ParamDomain::Categorical { values } => ParamRange::Categorical {
                values: values
                    .iter()
                    .filter(|v| observed.iter().any(|o| matches!(o, ParamValue::Cat(s) if s == *v)))
                    .cloned()
                    .collect(),
            },
            _ => {
                let nums: Vec<f64> = observed
                    .iter()
                    .filter_map(|v| match v {
                        ParamValue::Int(i) => Some(*i as f64),
                        ParamValue::Real(r) => Some(*r),
                        ParamValue::Cat(_) => None,
                    })
                    .collect();
                if nums.is_empty() {
                    continue;
                }
                let (lo, hi) = prune_numeric(&nums, dev);
                ParamRange::Numeric { lo, hi }
            }
        };
        params.insert(def.name.clone(), range);
    }
    (ranked, params)
}

/// Database entry for one (dataset, protected attribute, algorithm) input.
pub fn build_entry(
    ds: &Dataset,
    dataset: &str,
    protected: &str,
    algorithm: AlgorithmKind,
    cfg: &BuildConfig,
    exec: &Executor,
) -> Result<DatabaseEntry, RepairError> {
    let (picked, lower_bound) = top_pipelines(ds, algorithm, cfg, exec)?;
    log::info!(
        "{dataset}/{protected}/{algorithm}: aggregating {} pipelines",
        picked.len()
    );
    let (components, params) = condense(&picked, algorithm, cfg.top_m, cfg.dev);
    let DataCharacteristics { p, f } = characteristics(ds);
    Ok(DatabaseEntry {
        dataset: dataset.to_owned(),
        p,
        f,
        protected: protected.to_owned(),
        lower_bound,
        algorithm,
        components,
        params,
    })
}

fn l1(entry: &DatabaseEntry, chars: DataCharacteristics) -> u64 {
    (entry.p.abs_diff(chars.p) + entry.f.abs_diff(chars.f)) as u64
}

/// Entry to reuse for an input, or `None` to search the default space.
///
/// Picks the dataset nearest in (rows, features) L1 distance, then the
/// protected attribute of that dataset whose recorded lower bound is closest
/// to `lower_bound`, then the entry for the same algorithm. Ties go to the
/// earliest entry.
pub fn match_input(
    db: &Database,
    chars: DataCharacteristics,
    lower_bound: f64,
    algorithm: AlgorithmKind,
) -> Option<&DatabaseEntry> {
    let nearest = db.entries.iter().min_by_key(|e| l1(e, chars))?;
    let same_dataset = || db.entries.iter().filter(|e| e.dataset == nearest.dataset);
    let mut closest: Option<(&DatabaseEntry, f64)> = None;
    for e in same_dataset() {
        let d = (e.lower_bound - lower_bound).abs();
        if closest.is_none_or(|(_, best)| d < best) {
            closest = Some((e, d));
        }
    }
    let protected = &closest?.0.protected;
    same_dataset().find(|e| &e.protected == protected && e.algorithm == algorithm)
}
