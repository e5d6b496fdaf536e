//! Tabular input: CSV loading, row selection, scaling, undersampling and
//! train/test splitting.

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use log::warn;
use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest standard deviation a scaler will divide by.
pub const MIN_STD: f64 = 1e-12;

pub const DEPARTMENT_COLUMN: &str = "Department";
pub const DEFAULT_DEPARTMENT: &str = "Research & Development";
pub const DEFAULT_TARGET: &str = "Attrition";
/// Target value that marks an employee who left.
pub const ATTRITION_VALUE: &str = "Yes";

/// The eight policy-actionable features used for the R&D case study.
pub const DEFAULT_FEATURES: [&str; 8] = [
    "EnvironmentSatisfaction",
    "JobInvolvement",
    "JobSatisfaction",
    "MonthlyIncome",
    "PercentSalaryHike",
    "YearsInCurrentRole",
    "YearsSinceLastPromotion",
    "YearsWithCurrManager",
];

/// Binary class label. Attrition is the negative class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Attrition,
    Retention,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Attrition => -1.0,
            Label::Retention => 1.0,
        }
    }

    /// `sign(score)` with `sign(0) = +1`.
    pub fn from_score(score: f64) -> Self {
        if score >= 0.0 {
            Label::Retention
        } else {
            Label::Attrition
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Label::Attrition => Label::Retention,
            Label::Retention => Label::Attrition,
        }
    }
}

impl From<Label> for i8 {
    fn from(label: Label) -> i8 {
        match label {
            Label::Attrition => -1,
            Label::Retention => 1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;

    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            -1 => Ok(Label::Attrition),
            1 => Ok(Label::Retention),
            other => Err(format!("label must be -1 or +1, got {other}")),
        }
    }
}

/// A single CSV cell, typed on read.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Number(f64),
    Text(String),
}

impl Cell {
    fn parse(raw: &str) -> Self {
        let raw = raw.trim();
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Cell::Number(v),
            _ => Cell::Text(raw.to_string()),
        }
    }

    pub fn as_text(&self) -> String {
        match self {
            Cell::Number(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Rows of a CSV file, every row sharing the header's column set.
#[derive(Clone, Debug)]
pub struct RawDataset {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl RawDataset {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn cell(&self, row: usize, column: usize) -> &Cell {
        &self.rows[row][column]
    }

    /// Numeric value of a cell; `row` is 0-based, errors report it 1-based.
    pub fn number(&self, row: usize, column: usize) -> Result<f64> {
        match &self.rows[row][column] {
            Cell::Number(v) => Ok(*v),
            Cell::Text(s) => Err(Error::NotNumeric {
                row: row + 1,
                column: self.columns[column].clone(),
                value: s.clone(),
            }),
        }
    }
}

/// Loads a headed CSV file and checks that every expected column is present.
pub fn load_csv(path: impl AsRef<Path>, expected_columns: &[&str]) -> Result<RawDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let raw = read_csv(file, expected_columns)?;
    log::info!(
        "loaded {} rows x {} columns from {}",
        raw.n_rows(),
        raw.columns.len(),
        path.display()
    );
    Ok(raw)
}

pub fn read_csv<R: Read>(reader: R, expected_columns: &[&str]) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let columns: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();

    let mut seen = HashSet::new();
    for c in &columns {
        if !seen.insert(c.as_str()) {
            return Err(Error::DuplicateColumn(c.clone()));
        }
    }
    for &expected in expected_columns {
        if !seen.contains(expected) {
            return Err(Error::MissingColumn(expected.to_string()));
        }
    }

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(columns.len());
        for (j, field) in record.iter().enumerate() {
            if field.trim().is_empty() {
                return Err(Error::MissingValue {
                    row: i + 1,
                    column: columns[j].clone(),
                });
            }
            row.push(Cell::parse(field));
        }
        rows.push(row);
    }
    Ok(RawDataset { columns, rows })
}

/// Unscaled feature matrix and encoded labels for the selected rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub x: Array2<f64>,
    pub y: Vec<Label>,
    /// 0-based indices into the source [`RawDataset`].
    pub row_ids: Vec<usize>,
    pub feature_names: Vec<String>,
}

impl Selection {
    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn take(&self, idx: &[usize]) -> Selection {
        Selection {
            x: self.x.select(Axis(0), idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn split(&self, ratio: f64, seed: u64) -> Result<(Selection, Selection)> {
        let (train, test) = split_indices(self.n_rows(), ratio, seed)?;
        Ok((self.take(&train), self.take(&test)))
    }
}

/// Filters rows to `department` (empty string keeps all rows), extracts the
/// feature columns as reals and encodes the target, preserving row order.
pub fn prepare(
    raw: &RawDataset,
    department: &str,
    features: &[String],
    target_column: &str,
) -> Result<Selection> {
    if features.is_empty() {
        return Err(Error::InvalidParameter("at least one feature is required".into()));
    }
    let target = raw.column_index(target_column)?;
    let feature_cols = features
        .iter()
        .map(|f| raw.column_index(f))
        .collect::<Result<Vec<_>>>()?;

    let mut categories: Vec<String> = Vec::new();
    for r in 0..raw.n_rows() {
        let v = raw.cell(r, target).as_text();
        if !categories.contains(&v) {
            categories.push(v);
        }
    }
    if categories.len() != 2 || !categories.iter().any(|c| c == ATTRITION_VALUE) {
        return Err(Error::TargetCategories {
            column: target_column.to_string(),
            found: categories,
        });
    }

    let selected: Vec<usize> = if department.is_empty() {
        (0..raw.n_rows()).collect()
    } else {
        let dept = raw.column_index(DEPARTMENT_COLUMN)?;
        (0..raw.n_rows())
            .filter(|&r| raw.cell(r, dept).as_text() == department)
            .collect()
    };
    if selected.is_empty() {
        return Err(Error::EmptySelection(department.to_string()));
    }

    let mut x = Array2::zeros((selected.len(), features.len()));
    let mut y = Vec::with_capacity(selected.len());
    for (i, &r) in selected.iter().enumerate() {
        for (j, &c) in feature_cols.iter().enumerate() {
            x[[i, j]] = raw.number(r, c)?;
        }
        y.push(if raw.cell(r, target).as_text() == ATTRITION_VALUE {
            Label::Attrition
        } else {
            Label::Retention
        });
    }
    Ok(Selection {
        x,
        y,
        row_ids: selected,
        feature_names: features.to_vec(),
    })
}

/// Per-column affine scaling fitted on a training matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    /// Fits column means and sample (n-1) standard deviations. Columns with
    /// zero spread get `MIN_STD`; see [`Scaler::constant_columns`].
    pub fn fit(x: &Array2<f64>) -> Result<Scaler> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "scaler needs at least 2 rows, got {n}"
            )));
        }
        let mut means = Vec::with_capacity(x.ncols());
        let mut stds = Vec::with_capacity(x.ncols());
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let mean = col.sum() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let mut std = var.sqrt();
            if !(std >= MIN_STD) {
                warn!("column {j} is constant; clamping its scale and marking it non-actionable");
                std = MIN_STD;
            }
            means.push(mean);
            stds.push(std);
        }
        Ok(Scaler { means, stds })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn constant_columns(&self) -> Vec<usize> {
        self.stds
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= MIN_STD)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check(x.ncols())?;
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.means[j]) / self.stds[j];
            }
        }
        Ok(out)
    }

    pub fn standardize(&self, v: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_iter(v.iter().enumerate().map(|(j, x)| (x - self.means[j]) / self.stds[j]))
    }

    pub fn destandardize(&self, v: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_iter(v.iter().enumerate().map(|(j, x)| x * self.stds[j] + self.means[j]))
    }

    /// A delta is a difference of two points, so only the scale applies.
    pub fn destandardize_delta(&self, delta: ArrayView1<f64>) -> Array1<f64> {
        Array1::from_iter(delta.iter().zip(&self.stds).map(|(d, s)| d * s))
    }

    fn check(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::Dimension(format!(
                "scaler fitted on {} features, got {d}",
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Names, actionability and scaling statistics of the `d` solver features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub feature_names: Vec<String>,
    pub actionable: Vec<bool>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl FeatureSchema {
    /// Builds a schema from a fitted scaler; constant columns are demoted to
    /// non-actionable.
    pub fn new(feature_names: Vec<String>, scaler: &Scaler) -> Result<FeatureSchema> {
        let mut actionable = vec![true; feature_names.len()];
        for j in scaler.constant_columns() {
            if let Some(a) = actionable.get_mut(j) {
                *a = false;
            }
        }
        let schema = FeatureSchema {
            feature_names,
            actionable,
            means: scaler.means.clone(),
            stds: scaler.stds.clone(),
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.feature_names.len();
        if d == 0 {
            return Err(Error::Dimension("schema has no features".into()));
        }
        if self.actionable.len() != d || self.means.len() != d || self.stds.len() != d {
            return Err(Error::Dimension("schema fields differ in length".into()));
        }
        if let Some(s) = self.stds.iter().find(|&&s| !(s >= MIN_STD)) {
            return Err(Error::InvalidParameter(format!("schema std {s} below {MIN_STD}")));
        }
        let mut seen = HashSet::new();
        for name in &self.feature_names {
            if !seen.insert(name) {
                return Err(Error::DuplicateColumn(name.clone()));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn scaler(&self) -> Scaler {
        Scaler {
            means: self.means.clone(),
            stds: self.stds.clone(),
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }
}

/// Standardized features with labels, ready for training or explanation.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedDataset {
    pub x: Array2<f64>,
    pub y: Vec<Label>,
    pub row_ids: Vec<usize>,
    pub schema: FeatureSchema,
}

impl PreparedDataset {
    pub fn from_selection(selection: &Selection, schema: &FeatureSchema) -> Result<Self> {
        if selection.feature_names != schema.feature_names {
            return Err(Error::Dimension(
                "selection features do not match the schema".into(),
            ));
        }
        Ok(PreparedDataset {
            x: schema.scaler().apply(&selection.x)?,
            y: selection.y.clone(),
            row_ids: selection.row_ids.clone(),
            schema: schema.clone(),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn take(&self, idx: &[usize]) -> PreparedDataset {
        PreparedDataset {
            x: self.x.select(Axis(0), idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            row_ids: idx.iter().map(|&i| self.row_ids[i]).collect(),
            schema: self.schema.clone(),
        }
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let attrition = self.y.iter().filter(|&&l| l == Label::Attrition).count();
        (attrition, self.y.len() - attrition)
    }

    pub fn undersample_majority(&self, seed: u64) -> Result<PreparedDataset> {
        Ok(self.take(&undersample_indices(&self.y, seed)?))
    }

    pub fn split(&self, ratio: f64, seed: u64) -> Result<(PreparedDataset, PreparedDataset)> {
        let (train, test) = split_indices(self.n_rows(), ratio, seed)?;
        Ok((self.take(&train), self.take(&test)))
    }
}

/// Row indices (ascending) that balance the classes: every minority row plus
/// a uniform sample of the majority drawn without replacement.
pub fn undersample_indices(y: &[Label], seed: u64) -> Result<Vec<usize>> {
    let (neg, pos): (Vec<usize>, Vec<usize>) =
        (0..y.len()).partition(|&i| y[i] == Label::Attrition);
    if neg.is_empty() {
        return Err(Error::SingleClass("retention"));
    }
    if pos.is_empty() {
        return Err(Error::SingleClass("attrition"));
    }
    let (minority, majority) = if neg.len() <= pos.len() {
        (neg, pos)
    } else {
        (pos, neg)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep: Vec<usize> = index::sample(&mut rng, majority.len(), minority.len())
        .into_iter()
        .map(|i| majority[i])
        .collect();
    keep.extend(minority);
    keep.sort_unstable();
    Ok(keep)
}

/// Shuffled partition of `0..n` into `floor(ratio * n)` training rows and the rest.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "cannot split {n} rows"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (ratio * n as f64).floor() as usize;
    let test = idx.split_off(n_train);
    Ok((idx, test))
}
