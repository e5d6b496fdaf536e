//! On-disk documents exchanged between commands.

use std::fs;
use std::path::Path;

use anyhow::{ensure, Context, Result};
use groupcf::models::ModelDocument;
use groupcf::{ExplanationReport, FeatureSchema};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

pub const MODEL_FILE: &str = "model.json";
pub const SCALER_FILE: &str = "scaler.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Scaling statistics and actionability of the model's features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerDocument {
    pub format_version: u32,
    pub schema: FeatureSchema,
}

impl ScalerDocument {
    pub fn new(schema: FeatureSchema) -> Self {
        ScalerDocument {
            format_version: FORMAT_VERSION,
            schema,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparameters {
    Logistic { l2: f64 },
    Forest { n_trees: usize, max_depth: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub params: Hyperparameters,
    pub test_accuracy: f64,
}

/// What `train` did, so a run can be reproduced and audited.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub data_path: String,
    pub department: String,
    pub target_column: String,
    pub features: Vec<String>,
    pub classifier: String,
    pub seed: u64,
    pub split_ratio: f64,
    /// Rows of the department selection; ids are 0-based data rows of the CSV.
    pub n_rows: usize,
    pub train_row_ids: Vec<usize>,
    pub test_row_ids: Vec<usize>,
    /// Training rows left after undersampling the majority class.
    pub balanced_train_row_ids: Vec<usize>,
    pub tuning: Vec<TuningResult>,
    pub selected: Hyperparameters,
    pub test_accuracy: f64,
}

/// One solve of the C sweep inside a diversity round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub c: f64,
    pub coverage: f64,
    pub sparsity: usize,
    pub l1_cost: f64,
    pub objective: f64,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundSweep {
    pub round: usize,
    pub blacklist: Vec<String>,
    pub candidates: Vec<Candidate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub format_version: u32,
    pub coverage_target: f64,
    pub report: ExplanationReport,
    pub c_sweeps: Vec<RoundSweep>,
}

/// Model and scaler written by `train`, checked against each other.
pub struct TrainedArtifacts {
    pub model: ModelDocument,
    pub scaler: ScalerDocument,
}

impl TrainedArtifacts {
    pub fn load(dir: &Path) -> Result<TrainedArtifacts> {
        let model: ModelDocument = read_json(&dir.join(MODEL_FILE))?;
        model.validate()?;
        let scaler: ScalerDocument = read_json(&dir.join(SCALER_FILE))?;
        ensure!(
            scaler.format_version == FORMAT_VERSION,
            "unsupported scaler format version {}",
            scaler.format_version
        );
        scaler.schema.validate()?;
        ensure!(
            model.feature_names == scaler.schema.feature_names,
            "model and scaler in {} describe different features",
            dir.display()
        );
        Ok(TrainedArtifacts { model, scaler })
    }
}
