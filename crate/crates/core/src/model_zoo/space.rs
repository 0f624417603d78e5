use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ZooError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmKind {
    #[serde(rename = "logreg")]
    LogisticRegression,
    #[serde(rename = "dtree")]
    DecisionTree,
    #[serde(rename = "rforest")]
    RandomForest,
    #[serde(rename = "gboost")]
    GradientBoosting,
    #[serde(rename = "knn")]
    Knn,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 5] = [
        AlgorithmKind::LogisticRegression,
        AlgorithmKind::DecisionTree,
        AlgorithmKind::RandomForest,
        AlgorithmKind::GradientBoosting,
        AlgorithmKind::Knn,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmKind::LogisticRegression => "logreg",
            AlgorithmKind::DecisionTree => "dtree",
            AlgorithmKind::RandomForest => "rforest",
            AlgorithmKind::GradientBoosting => "gboost",
            AlgorithmKind::Knn => "knn",
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmKind {
    type Err = ZooError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| ZooError::UnknownName(s.to_owned()))
    }
}

/// Preprocessing step paired with the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    None,
    Standardize,
    #[serde(rename = "minmax")]
    MinMax,
    #[serde(rename = "variance_topk")]
    VarianceTopK,
    Rebalance,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 5] = [
        ComponentKind::None,
        ComponentKind::Standardize,
        ComponentKind::MinMax,
        ComponentKind::VarianceTopK,
        ComponentKind::Rebalance,
    ];

    pub fn index(self) -> usize {
        ComponentKind::ALL.iter().position(|&c| c == self).unwrap()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamDomain {
    Categorical { values: Vec<String> },
    Integer { lo: i64, hi: i64, scale: Scale },
    Real { lo: f64, hi: f64, scale: Scale },
}

/// A concrete hyperparameter value. Serialises as a bare JSON number or string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Cat(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Cat(v) => f.write_str(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDef {
    pub name: String,
    pub domain: ParamDomain,
}

fn unit_to_range(u: f64, lo: f64, hi: f64, scale: Scale) -> f64 {
    match scale {
        Scale::Linear => lo + u * (hi - lo),
        Scale::Log => (lo.ln() + u * (hi.ln() - lo.ln())).exp(),
    }
}

fn range_to_unit(v: f64, lo: f64, hi: f64, scale: Scale) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let u = match scale {
        Scale::Linear => (v - lo) / (hi - lo),
        Scale::Log => (v.ln() - lo.ln()) / (hi.ln() - lo.ln()),
    };
    u.clamp(0.0, 1.0)
}

impl ParamDef {
    pub fn categorical(name: &str, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            domain: ParamDomain::Categorical {
                values: values.iter().map(|v| (*v).to_owned()).collect(),
            },
        }
    }

    pub fn integer(name: &str, lo: i64, hi: i64, scale: Scale) -> Self {
        Self {
            name: name.into(),
            domain: ParamDomain::Integer { lo, hi, scale },
        }
    }

    pub fn real(name: &str, lo: f64, hi: f64, scale: Scale) -> Self {
        Self {
            name: name.into(),
            domain: ParamDomain::Real { lo, hi, scale },
        }
    }

    /// Domain checks. Ranges may collapse to a single point (`lo == hi`),
    /// which happens for spaces pruned from a database.
    pub fn validate(&self) -> Result<(), ZooError> {
        let bad = |msg: &str| Err(ZooError::InvalidSpace(format!("{}: {msg}", self.name)));
        match &self.domain {
            ParamDomain::Categorical { values } => {
                if values.is_empty() {
                    return bad("empty categorical set");
                }
                let unique: HashSet<&String> = values.iter().collect();
                if unique.len() != values.len() {
                    return bad("duplicate categorical value");
                }
            }
            ParamDomain::Integer { lo, hi, scale } => {
                if lo > hi {
                    return bad("lo > hi");
                }
                if *scale == Scale::Log && *lo <= 0 {
                    return bad("log scale needs lo > 0");
                }
            }
            ParamDomain::Real { lo, hi, scale } => {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                    return bad("invalid real range");
                }
                if *scale == Scale::Log && *lo <= 0.0 {
                    return bad("log scale needs lo > 0");
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, value: &ParamValue) -> bool {
        match (&self.domain, value) {
            (ParamDomain::Categorical { values }, ParamValue::Cat(v)) => values.contains(v),
            (ParamDomain::Integer { lo, hi, .. }, ParamValue::Int(v)) => lo <= v && v <= hi,
            (ParamDomain::Real { lo, hi, .. }, ParamValue::Real(v)) => *lo <= *v && *v <= *hi,
            _ => false,
        }
    }

    /// Midpoint of linear ranges, geometric midpoint of log ranges, first categorical value.
    pub fn default_value(&self) -> ParamValue {
        match &self.domain {
            ParamDomain::Categorical { values } => ParamValue::Cat(values[0].clone()),
            ParamDomain::Integer { lo, hi, scale } => {
                let mid = match scale {
                    Scale::Linear => (*lo as f64 + *hi as f64) / 2.0,
                    Scale::Log => (*lo as f64 * *hi as f64).sqrt(),
                };
                ParamValue::Int((mid.round() as i64).clamp(*lo, *hi))
            }
            ParamDomain::Real { lo, hi, scale } => ParamValue::Real(match scale {
                Scale::Linear => (lo + hi) / 2.0,
                Scale::Log => (lo * hi).sqrt(),
            }),
        }
    }

    /// Number of surrogate coordinates' categories, or `None` for numeric params.
    pub fn cardinality(&self) -> Option<usize> {
        match &self.domain {
            ParamDomain::Categorical { values } => Some(values.len()),
            _ => None,
        }
    }

    /// Surrogate coordinate: `[0, 1]` for numeric params (log domain where
    /// declared), the value's index for categorical ones.
    pub fn encode(&self, value: &ParamValue) -> Result<f64, ZooError> {
        if !self.contains(value) {
            return Err(ZooError::OutOfDomain {
                name: self.name.clone(),
                value: value.to_string(),
            });
        }
        Ok(match (&self.domain, value) {
            (ParamDomain::Categorical { values }, ParamValue::Cat(v)) => {
                values.iter().position(|x| x == v).unwrap() as f64
            }
            (ParamDomain::Integer { lo, hi, scale }, ParamValue::Int(v)) => {
                range_to_unit(*v as f64, *lo as f64, *hi as f64, *scale)
            }
            (ParamDomain::Real { lo, hi, scale }, ParamValue::Real(v)) => range_to_unit(*v, *lo, *hi, *scale),
            _ => unreachable!("contains() checked the pairing"),
        })
    }

    pub fn decode(&self, coord: f64) -> ParamValue {
        match &self.domain {
            ParamDomain::Categorical { values } => {
                let idx = (coord.round().max(0.0) as usize).min(values.len() - 1);
                ParamValue::Cat(values[idx].clone())
            }
            ParamDomain::Integer { lo, hi, scale } => {
                let v = unit_to_range(coord.clamp(0.0, 1.0), *lo as f64, *hi as f64, *scale);
                ParamValue::Int((v.round() as i64).clamp(*lo, *hi))
            }
            ParamDomain::Real { lo, hi, scale } => {
                ParamValue::Real(unit_to_range(coord.clamp(0.0, 1.0), *lo, *hi, *scale).clamp(*lo, *hi))
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamValue {
        match &self.domain {
            ParamDomain::Categorical { values } => ParamValue::Cat(values[rng.gen_range(0..values.len())].clone()),
            _ => self.decode(rng.gen::<f64>()),
        }
    }
}

/// Hyperparameter and component search space for one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterSpace {
    pub algorithm: AlgorithmKind,
    pub params: Vec<ParamDef>,
    pub components: Vec<ComponentKind>,
}

/// One pipeline: a component, a classifier and its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub algorithm: AlgorithmKind,
    pub component: ComponentKind,
    pub params: BTreeMap<String, ParamValue>,
}

impl PipelineConfig {
    fn param(&self, name: &str) -> Result<&ParamValue, ZooError> {
        self.params
            .get(name)
            .ok_or_else(|| ZooError::InvalidConfig(format!("missing parameter `{name}`")))
    }

    pub fn int(&self, name: &str) -> Result<i64, ZooError> {
        match self.param(name)? {
            ParamValue::Int(v) => Ok(*v),
            other => Err(ZooError::InvalidConfig(format!(
                "`{name}` should be an integer, got {other}"
            ))),
        }
    }

    pub fn real(&self, name: &str) -> Result<f64, ZooError> {
        match self.param(name)? {
            ParamValue::Real(v) => Ok(*v),
            ParamValue::Int(v) => Ok(*v as f64),
            other => Err(ZooError::InvalidConfig(format!(
                "`{name}` should be a number, got {other}"
            ))),
        }
    }

    pub fn cat(&self, name: &str) -> Result<&str, ZooError> {
        match self.param(name)? {
            ParamValue::Cat(v) => Ok(v),
            other => Err(ZooError::InvalidConfig(format!(
                "`{name}` should be a string, got {other}"
            ))),
        }
    }
}

impl HyperparameterSpace {
    pub fn validate(&self) -> Result<(), ZooError> {
        let mut names = HashSet::new();
        for p in &self.params {
            if !names.insert(&p.name) {
                return Err(ZooError::InvalidSpace(format!("duplicate parameter `{}`", p.name)));
            }
            p.validate()?;
        }
        if self.components.is_empty() {
            return Err(ZooError::InvalidSpace("no components".into()));
        }
        Ok(())
    }

    pub fn param(&self, name: &str) -> Option<&ParamDef> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn contains(&self, cfg: &PipelineConfig) -> bool {
        cfg.algorithm == self.algorithm
            && self.components.contains(&cfg.component)
            && cfg.params.len() == self.params.len()
            && self
                .params
                .iter()
                .all(|p| cfg.params.get(&p.name).is_some_and(|v| p.contains(v)))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PipelineConfig {
        let component = self.components[rng.gen_range(0..self.components.len())];
        let params = self.params.iter().map(|p| (p.name.clone(), p.sample(rng))).collect();
        PipelineConfig {
            algorithm: self.algorithm,
            component,
            params,
        }
    }

    /// Surrogate coordinates: the component index followed by one coordinate per param.
    pub fn encode(&self, cfg: &PipelineConfig) -> Result<Vec<f64>, ZooError> {
        let component = self
            .components
            .iter()
            .position(|&c| c == cfg.component)
            .ok_or_else(|| ZooError::OutOfDomain {
                name: "component".into(),
                value: format!("{:?}", cfg.component),
            })?;
        let mut coords = Vec::with_capacity(self.params.len() + 1);
        coords.push(component as f64);
        for p in &self.params {
            let value = cfg
                .params
                .get(&p.name)
                .ok_or_else(|| ZooError::InvalidConfig(format!("missing parameter `{}`", p.name)))?;
            coords.push(p.encode(value)?);
        }
        Ok(coords)
    }

    pub fn decode(&self, coords: &[f64]) -> PipelineConfig {
        let idx = (coords[0].round().max(0.0) as usize).min(self.components.len() - 1);
        PipelineConfig {
            algorithm: self.algorithm,
            component: self.components[idx],
            params: self
                .params
                .iter()
                .zip(&coords[1..])
                .map(|(p, &c)| (p.name.clone(), p.decode(c)))
                .collect(),
        }
    }

    /// Category count per surrogate coordinate (`None` = numeric).
    pub fn coordinate_kinds(&self) -> Vec<Option<usize>> {
        std::iter::once(Some(self.components.len()))
            .chain(self.params.iter().map(ParamDef::cardinality))
            .collect()
    }
}

pub fn default_space(algorithm: AlgorithmKind) -> HyperparameterSpace {
    use Scale::{Linear, Log};
    let params = match algorithm {
        AlgorithmKind::LogisticRegression => vec![
            ParamDef::real("learning_rate", 1e-4, 1.0, Log),
            ParamDef::real("l2", 1e-6, 1.0, Log),
            ParamDef::integer("epochs", 20, 300, Linear),
        ],
        AlgorithmKind::DecisionTree => vec![
            ParamDef::integer("max_depth", 2, 30, Linear),
            ParamDef::integer("min_leaf", 1, 32, Log),
            ParamDef::categorical("criterion", &["gini", "entropy"]),
        ],
        AlgorithmKind::RandomForest => vec![
            ParamDef::integer("trees", 16, 256, Log),
            ParamDef::integer("max_depth", 2, 30, Linear),
            ParamDef::categorical("max_features", &["sqrt", "log2", "all"]),
            ParamDef::integer("min_leaf", 1, 32, Log),
            ParamDef::categorical("bootstrap", &["true", "false"]),
        ],
        AlgorithmKind::GradientBoosting => vec![
            ParamDef::integer("stages", 20, 300, Log),
            ParamDef::real("learning_rate", 0.01, 0.5, Log),
            ParamDef::integer("max_depth", 1, 8, Linear),
            ParamDef::real("subsample", 0.5, 1.0, Linear),
        ],
        AlgorithmKind::Knn => vec![
            ParamDef::integer("k", 1, 51, Linear),
            ParamDef::categorical("weights", &["uniform", "distance"]),
        ],
    };
    HyperparameterSpace {
        algorithm,
        params,
        components: ComponentKind::ALL.to_vec(),
    }
}

/// The unrepaired model: no component and per-parameter defaults.
pub fn default_config(algorithm: AlgorithmKind) -> PipelineConfig {
    let space = default_space(algorithm);
    PipelineConfig {
        algorithm,
        component: ComponentKind::None,
        params: space
            .params
            .iter()
            .map(|p| (p.name.clone(), p.default_value()))
            .collect(),
    }
}
