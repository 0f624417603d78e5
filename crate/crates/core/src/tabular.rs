//! CSV ingestion with a fairness schema, one-hot encoding and reproducible splits.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Deserializer, Serialize};

use crate::digest::sha256_hex;
use crate::seed;

const MAX_SPLIT_ATTEMPTS: usize = 100;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("no rows left after dropping rows with missing values")]
    EmptyAfterCleaning,
    #[error("label column has a single class")]
    SingleClassLabel,
    #[error("protected column has a single group")]
    SingleGroupProtected,
    #[error("no features left after removing label, protected and dropped columns")]
    NoFeatures,
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("train fraction {0} is outside (0, 1)")]
    InvalidFraction(f64),
    #[error("could not draw a split with both classes and both groups on each side after {0} attempts")]
    DegenerateSplit(usize),
}

fn cell_value<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Cell {
        Str(String),
        Int(i64),
        Float(f64),
        Bool(bool),
    }
    Ok(match Cell::deserialize(d)? {
        Cell::Str(s) => s,
        Cell::Int(i) => i.to_string(),
        Cell::Float(f) => f.to_string(),
        Cell::Bool(b) => b.to_string(),
    })
}

/// Which columns carry the label and the protected attribute, and how to binarise them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(rename = "label")]
    pub label_column: String,
    /// Raw cell value mapped to y = 1.
    #[serde(rename = "favorable", deserialize_with = "cell_value")]
    pub favorable_value: String,
    #[serde(rename = "protected")]
    pub protected_column: String,
    /// Raw cell value mapped to z = 0.
    #[serde(rename = "unprivileged", deserialize_with = "cell_value")]
    pub unprivileged_value: String,
    #[serde(rename = "drop", default)]
    pub drop_columns: Vec<String>,
    #[serde(rename = "categorical", default, skip_serializing_if = "Option::is_none")]
    pub categorical_override: Option<Vec<String>>,
}

impl Schema {
    pub fn new(
        label_column: impl Into<String>,
        favorable_value: impl Into<String>,
        protected_column: impl Into<String>,
        unprivileged_value: impl Into<String>,
    ) -> Self {
        Self {
            label_column: label_column.into(),
            favorable_value: favorable_value.into(),
            protected_column: protected_column.into(),
            unprivileged_value: unprivileged_value.into(),
            drop_columns: Vec::new(),
            categorical_override: None,
        }
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let schema: Schema = serde_json::from_reader(File::open(path)?)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.label_column == self.protected_column {
            return Err(DataError::InvalidSchema(
                "label and protected column must differ".into(),
            ));
        }
        for dropped in &self.drop_columns {
            if dropped == &self.label_column || dropped == &self.protected_column {
                return Err(DataError::InvalidSchema(format!(
                    "`{dropped}` cannot be both dropped and used as label/protected"
                )));
            }
        }
        Ok(())
    }

    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("schema serializes");
        sha256_hex(&bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub schema_digest: String,
    pub dropped_rows: usize,
}

/// One retained feature column, typed once at load time.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureColumn {
    Numeric(Vec<f64>),
    /// `codes[i]` indexes `levels`; levels are in first-appearance order of the source file.
    Categorical {
        levels: Vec<String>,
        codes: Vec<u32>,
    },
}

impl FeatureColumn {
    pub fn len(&self) -> usize {
        match self {
            FeatureColumn::Numeric(v) => v.len(),
            FeatureColumn::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Self {
        match self {
            FeatureColumn::Numeric(v) => FeatureColumn::Numeric(rows.iter().map(|&r| v[r]).collect()),
            FeatureColumn::Categorical { levels, codes } => FeatureColumn::Categorical {
                levels: levels.clone(),
                codes: rows.iter().map(|&r| codes[r]).collect(),
            },
        }
    }
}

/// Labelled tabular data with a binary protected attribute.
///
/// `y[i] = 1` marks the favorable label and `z[i] = 0` the unprivileged group.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    feature_names: Vec<String>,
    columns: Vec<FeatureColumn>,
    y: Vec<u8>,
    z: Vec<u8>,
    provenance: Provenance,
}

fn has_both(values: &[u8]) -> bool {
    values.contains(&0) && values.contains(&1)
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        columns: Vec<FeatureColumn>,
        y: Vec<u8>,
        z: Vec<u8>,
        provenance: Provenance,
    ) -> Result<Self, DataError> {
        if feature_names.len() != columns.len() {
            return Err(DataError::LengthMismatch(format!(
                "{} names for {} columns",
                feature_names.len(),
                columns.len()
            )));
        }
        if columns.is_empty() {
            return Err(DataError::NoFeatures);
        }
        let n = y.len();
        if z.len() != n || columns.iter().any(|c| c.len() != n) {
            return Err(DataError::LengthMismatch(
                "labels, protected values and columns must have equal length".into(),
            ));
        }
        if n == 0 {
            return Err(DataError::EmptyAfterCleaning);
        }
        if y.iter().chain(&z).any(|&v| v > 1) {
            return Err(DataError::LengthMismatch("labels must be 0/1".into()));
        }
        if !has_both(&y) {
            return Err(DataError::SingleClassLabel);
        }
        if !has_both(&z) {
            return Err(DataError::SingleGroupProtected);
        }
        Ok(Self {
            feature_names,
            columns,
            y,
            z,
            provenance,
        })
    }

    /// All-numeric dataset from row-major features.
    pub fn from_numeric_rows(
        feature_names: Vec<String>,
        rows: &[Vec<f64>],
        y: Vec<u8>,
        z: Vec<u8>,
    ) -> Result<Self, DataError> {
        let width = feature_names.len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(DataError::LengthMismatch("ragged feature rows".into()));
        }
        let columns = (0..width)
            .map(|c| FeatureColumn::Numeric(rows.iter().map(|r| r[c]).collect()))
            .collect();
        let provenance = Provenance {
            source: "<memory>".into(),
            schema_digest: String::new(),
            dropped_rows: 0,
        };
        Self::new(feature_names, columns, y, z, provenance)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        &self.y
    }

    pub fn protected(&self) -> &[u8] {
        &self.z
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Rows at `indices`, in that order. The result may violate the
    /// both-classes invariant; [`split`] checks it before returning.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            feature_names: self.feature_names.clone(),
            columns: self.columns.iter().map(|c| c.select(indices)).collect(),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            z: indices.iter().map(|&i| self.z[i]).collect(),
            provenance: self.provenance.clone(),
        }
    }

    fn is_complete(&self) -> bool {
        has_both(&self.y) && has_both(&self.z)
    }

    /// Majority label; ties go to the favorable label.
    pub fn majority_label(&self) -> u8 {
        let ones = self.y.iter().filter(|&&v| v == 1).count();
        u8::from(2 * ones >= self.y.len())
    }
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = File::open(path)?;
    load_csv_reader(file, schema, &path.display().to_string())
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Same as [`load_csv`] for any reader; `source` is recorded in the provenance.
pub fn load_csv_reader<R: Read>(reader: R, schema: &Schema, source: &str) -> Result<Dataset, DataError> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_owned()))
    };
    let label_idx = position(&schema.label_column)?;
    let protected_idx = position(&schema.protected_column)?;
    let mut excluded: HashSet<usize> = [label_idx, protected_idx].into_iter().collect();
    for name in &schema.drop_columns {
        excluded.insert(position(name)?);
    }
    let forced: HashSet<&str> = match &schema.categorical_override {
        Some(names) => {
            for name in names {
                position(name)?;
            }
            names.iter().map(String::as_str).collect()
        }
        None => HashSet::new(),
    };
    let retained: Vec<usize> = (0..header.len()).filter(|i| !excluded.contains(i)).collect();
    if retained.is_empty() {
        return Err(DataError::NoFeatures);
    }

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); retained.len()];
    let mut y = Vec::new();
    let mut z = Vec::new();
    let mut dropped = 0usize;
    for record in rdr.records() {
        let record = record?;
        let missing = record.get(label_idx).is_none_or(str::is_empty)
            || record.get(protected_idx).is_none_or(str::is_empty)
            || retained.iter().any(|&i| record.get(i).is_none_or(str::is_empty));
        if missing {
            dropped += 1;
            continue;
        }
        y.push(u8::from(record[label_idx] == schema.favorable_value));
        z.push(u8::from(record[protected_idx] != schema.unprivileged_value));
        for (slot, &i) in retained.iter().enumerate() {
            cells[slot].push(record[i].to_owned());
        }
    }
    if dropped > 0 {
        log::info!("{source}: dropped {dropped} rows with missing values");
    }
    if y.is_empty() {
        return Err(DataError::EmptyAfterCleaning);
    }

    let feature_names: Vec<String> = retained.iter().map(|&i| header[i].clone()).collect();
    let columns = feature_names
        .iter()
        .zip(cells)
        .map(|(name, col)| type_column(col, forced.contains(name.as_str())))
        .collect();
    let provenance = Provenance {
        source: source.to_owned(),
        schema_digest: schema.digest(),
        dropped_rows: dropped,
    };
    Dataset::new(feature_names, columns, y, z, provenance)
}

fn type_column(cells: Vec<String>, forced_categorical: bool) -> FeatureColumn {
    if !forced_categorical {
        let parsed: Option<Vec<f64>> = cells.iter().map(|c| parse_finite(c)).collect();
        if let Some(values) = parsed {
            return FeatureColumn::Numeric(values);
        }
    }
    let mut lookup: HashMap<String, u32> = HashMap::new();
    let mut levels = Vec::new();
    let codes = cells
        .into_iter()
        .map(|cell| {
            *lookup.entry(cell).or_insert_with_key(|key| {
                levels.push(key.clone());
                (levels.len() - 1) as u32
            })
        })
        .collect();
    FeatureColumn::Categorical { levels, codes }
}

/// Uniform random partition into (train, validation), re-drawn until both sides
/// contain both label classes and both protected groups.
pub fn split(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset), DataError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(DataError::InvalidFraction(train_fraction));
    }
    let p = ds.len();
    let n_train = (train_fraction * p as f64).round() as usize;
    if n_train == 0 || n_train == p {
        return Err(DataError::DegenerateSplit(0));
    }
    let mut rng = seed::derived_rng(seed, seed::STREAM_SPLIT, 0);
    let mut order: Vec<usize> = (0..p).collect();
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        order.shuffle(&mut rng);
        let mut train_idx = order[..n_train].to_vec();
        let mut val_idx = order[n_train..].to_vec();
        train_idx.sort_unstable();
        val_idx.sort_unstable();
        let train = ds.select(&train_idx);
        let val = ds.select(&val_idx);
        if train.is_complete() && val.is_complete() {
            return Ok((train, val));
        }
    }
    Err(DataError::DegenerateSplit(MAX_SPLIT_ATTEMPTS))
}

/// Number of data points and of retained (pre-expansion) features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataCharacteristics {
    pub p: usize,
    pub f: usize,
}

pub fn characteristics(ds: &Dataset) -> DataCharacteristics {
    DataCharacteristics {
        p: ds.len(),
        f: ds.columns.len(),
    }
}

/// Dense row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, names: Vec<String>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        assert_eq!(names.len(), cols, "matrix column names");
        Self {
            rows,
            cols,
            data,
            names,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.data[r * self.cols + c])
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix::new(rows.len(), self.cols, data, self.names.clone())
    }

    pub fn select_cols(&self, cols: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for r in 0..self.rows {
            let row = self.row(r);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        let names = cols.iter().map(|&c| self.names[c].clone()).collect();
        FeatureMatrix::new(self.rows, cols.len(), data, names)
    }

    pub fn map_columns(&self, mut f: impl FnMut(usize, f64) -> f64) -> FeatureMatrix {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i % self.cols, v))
            .collect();
        FeatureMatrix::new(self.rows, self.cols, data, self.names.clone())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ColumnEncoding {
    Numeric,
    /// Categories in first-appearance order of the fitting rows.
    OneHot(Vec<String>),
}

/// Encoding dictionary fitted on one dataset and reusable on others.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureEncoder {
    columns: Vec<ColumnEncoding>,
    names: Vec<String>,
}

impl FeatureEncoder {
    pub fn fit(ds: &Dataset) -> Self {
        let mut names = Vec::new();
        let columns = ds
            .columns
            .iter()
            .zip(&ds.feature_names)
            .map(|(col, name)| match col {
                FeatureColumn::Numeric(_) => {
                    names.push(name.clone());
                    ColumnEncoding::Numeric
                }
                FeatureColumn::Categorical { levels, codes } => {
                    let mut seen = vec![false; levels.len()];
                    let mut order = Vec::new();
                    for &code in codes {
                        if !std::mem::replace(&mut seen[code as usize], true) {
                            order.push(levels[code as usize].clone());
                        }
                    }
                    names.extend(order.iter().map(|cat| format!("{name}={cat}")));
                    ColumnEncoding::OneHot(order)
                }
            })
            .collect();
        Self { columns, names }
    }

    pub fn width(&self) -> usize {
        self.names.len()
    }

    /// Encodes `ds`; categories unseen at fit time become an all-zero block.
    pub fn transform(&self, ds: &Dataset) -> Result<FeatureMatrix, DataError> {
        if ds.columns.len() != self.columns.len() {
            return Err(DataError::LengthMismatch(format!(
                "encoder fitted on {} columns, dataset has {}",
                self.columns.len(),
                ds.columns.len()
            )));
        }
        let rows = ds.len();
        let cols = self.width();
        let mut data = vec![0.0; rows * cols];
        let mut offset = 0;
        for (enc, col) in self.columns.iter().zip(&ds.columns) {
            match (enc, col) {
                (ColumnEncoding::Numeric, FeatureColumn::Numeric(values)) => {
                    for (r, &v) in values.iter().enumerate() {
                        data[r * cols + offset] = v;
                    }
                    offset += 1;
                }
                (ColumnEncoding::OneHot(categories), FeatureColumn::Categorical { levels, codes }) => {
                    let slot_of: HashMap<&str, usize> =
                        categories.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
                    let level_slot: Vec<Option<usize>> =
                        levels.iter().map(|l| slot_of.get(l.as_str()).copied()).collect();
                    for (r, &code) in codes.iter().enumerate() {
                        if let Some(slot) = level_slot[code as usize] {
                            data[r * cols + offset + slot] = 1.0;
                        }
                    }
                    offset += categories.len();
                }
                _ => {
                    return Err(DataError::LengthMismatch(
                        "column type differs from the fitted encoder".into(),
                    ))
                }
            }
        }
        Ok(FeatureMatrix::new(rows, cols, data, self.names.clone()))
    }
}

/// Fits an encoder on `ds` and encodes it.
pub fn encode(ds: &Dataset) -> FeatureMatrix {
    FeatureEncoder::fit(ds)
        .transform(ds)
        .expect("encoder fitted on the same dataset")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = "\
age,color,score,income,sex
30,red,1.5,>50K,Male
40,blue,2.5,<=50K,Female
50,red,3.5,>50K,Female
60,green,4.5,<=50K,Male
";

    fn toy_schema() -> Schema {
        Schema::new("income", ">50K", "sex", "Female")
    }

    fn toy() -> Dataset {
        load_csv_reader(TOY.as_bytes(), &toy_schema(), "toy").unwrap()
    }

    #[test]
    fn load_applies_schema() {
        let ds = toy();
        assert_eq!(ds.labels(), &[1, 0, 1, 0]);
        assert_eq!(ds.protected(), &[1, 0, 0, 1]);
        assert_eq!(ds.feature_names(), &["age", "color", "score"]);
        assert_eq!(characteristics(&ds), DataCharacteristics { p: 4, f: 3 });
        assert!(matches!(ds.columns()[1], FeatureColumn::Categorical { .. }));
    }

    #[test]
    fn single_protected_group_rejected() {
        let csv = "a,y,g\n1,1,x\n2,0,x\n";
        let err = load_csv_reader(csv.as_bytes(), &Schema::new("y", "1", "g", "x"), "t").unwrap_err();
        assert!(matches!(err, DataError::SingleGroupProtected));
        let err = load_csv_reader(csv.as_bytes(), &Schema::new("y", "1", "g", "q"), "t").unwrap_err();
        assert!(matches!(err, DataError::SingleGroupProtected));
    }

    #[test]
    fn single_class_and_missing_column() {
        let csv = "a,y,g\n1,1,x\n2,1,w\n";
        let err = load_csv_reader(csv.as_bytes(), &Schema::new("y", "1", "g", "x"), "t").unwrap_err();
        assert!(matches!(err, DataError::SingleClassLabel));
        let err = load_csv_reader(csv.as_bytes(), &Schema::new("label", "1", "g", "x"), "t").unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(name) if name == "label"));
    }

    #[test]
    fn missing_cells_drop_rows() {
        let csv = "a,b,y,g\n1,,1,x\n2,3,1,w\n4,5,0,x\n,,,\n";
        let ds = load_csv_reader(csv.as_bytes(), &Schema::new("y", "1", "g", "x"), "t").unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.provenance().dropped_rows, 2);

        let csv = "a,y,g\n,1,x\n";
        let err = load_csv_reader(csv.as_bytes(), &Schema::new("y", "1", "g", "x"), "t").unwrap_err();
        assert!(matches!(err, DataError::EmptyAfterCleaning));
    }

    #[test]
    fn schema_invariants() {
        let mut s = Schema::new("y", "1", "y", "0");
        assert!(s.validate().is_err());
        s.protected_column = "g".into();
        s.drop_columns = vec!["g".into()];
        assert!(s.validate().is_err());
    }

    #[test]
    fn schema_json_keys_and_numeric_values() {
        let s: Schema =
            serde_json::from_str(r#"{"label":"y","favorable":1,"protected":"g","unprivileged":"f","drop":["id"]}"#)
                .unwrap();
        assert_eq!(s.favorable_value, "1");
        assert_eq!(s.drop_columns, vec!["id"]);
        assert!(s.categorical_override.is_none());
    }

    #[test]
    fn categorical_override_forces_one_hot() {
        let mut schema = toy_schema();
        schema.categorical_override = Some(vec!["age".into()]);
        let ds = load_csv_reader(TOY.as_bytes(), &schema, "toy").unwrap();
        assert!(matches!(ds.columns()[0], FeatureColumn::Categorical { .. }));
        // age: 4 levels, color: 3 levels, score numeric
        assert_eq!(encode(&ds).cols(), 8);
    }

    #[test]
    fn one_hot_first_appearance_order() {
        let ds = Dataset::new(
            vec!["c".into()],
            vec![FeatureColumn::Categorical {
                levels: vec!["b".into(), "a".into()],
                codes: vec![1, 0, 1],
            }],
            vec![1, 0, 1],
            vec![0, 1, 1],
            Provenance {
                source: "t".into(),
                schema_digest: String::new(),
                dropped_rows: 0,
            },
        )
        .unwrap();
        let m = encode(&ds);
        assert_eq!(m.names(), &["c=a", "c=b"]);
        assert_eq!(m.as_slice(), &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn mixed_width_counts_categories() {
        // 2 numeric + 1 three-category column
        let m = encode(&toy());
        assert_eq!(m.cols(), 5);
        assert_eq!(m.names(), &["age", "color=red", "color=blue", "color=green", "score"]);
    }

    #[test]
    fn unseen_category_encodes_to_zero_block() {
        let ds = toy();
        let train = ds.select(&[0, 1]);
        let enc = FeatureEncoder::fit(&train);
        assert_eq!(enc.width(), 4);
        let m = enc.transform(&ds).unwrap();
        assert_eq!(m.row(3), &[60.0, 0.0, 0.0, 4.5]);
    }

    #[test]
    fn split_cardinality_and_determinism() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let z = vec![0, 0, 1, 1, 0, 0, 1, 1, 0, 1];
        let ds = Dataset::from_numeric_rows(vec!["x".into()], &rows, y, z).unwrap();
        let (train, val) = split(&ds, 0.7, 1).unwrap();
        assert_eq!((train.len(), val.len()), (7, 3));
        let mut all: Vec<f64> = encode(&train).as_slice().to_vec();
        all.extend_from_slice(encode(&val).as_slice());
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(f64::from).collect::<Vec<_>>());
        let again = split(&ds, 0.7, 1).unwrap();
        assert_eq!(again.0, train);
        assert_eq!(again.1, val);
    }

    #[test]
    fn split_rejects_bad_fraction_and_degenerate_data() {
        let rows: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_numeric_rows(vec!["x".into()], &rows, vec![1, 0, 0, 0], vec![0, 1, 1, 1]).unwrap();
        assert!(matches!(split(&ds, 1.0, 0), Err(DataError::InvalidFraction(_))));
        // a single positive cannot sit on both sides
        assert!(matches!(split(&ds, 0.5, 0), Err(DataError::DegenerateSplit(100))));
    }
}
