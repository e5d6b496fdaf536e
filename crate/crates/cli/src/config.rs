//! Run configuration: built-in defaults, then a JSON config file, then flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use groupcf::dataset::{DEFAULT_DEPARTMENT, DEFAULT_FEATURES, DEFAULT_TARGET};
use groupcf::DEFAULT_MARGIN;
use serde::{Deserialize, Serialize};

pub const DEFAULT_C_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_K: usize = 3;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_SPLIT_RATIO: f64 = 0.8;
pub const DEFAULT_COVERAGE_TARGET: f64 = 0.8;
pub const DEFAULT_OUTPUT_DIR: &str = "out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Logistic,
    Forest,
}

impl ClassifierKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::Forest => "forest",
        }
    }
}

/// `C` may be given as a single value or a grid.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(c) => vec![c],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    data_path: Option<PathBuf>,
    department: Option<String>,
    features: Option<Vec<String>>,
    target_column: Option<String>,
    classifier: Option<ClassifierKind>,
    c: Option<OneOrMany>,
    k: Option<usize>,
    margin: Option<f64>,
    weights: Option<BTreeMap<String, f64>>,
    blacklist: Option<Vec<String>>,
    seed: Option<u64>,
    split_ratio: Option<f64>,
    output_dir: Option<PathBuf>,
    coverage_target: Option<f64>,
    l2: Option<f64>,
    n_trees: Option<usize>,
    max_depth: Option<usize>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct ConfigArgs {
    /// JSON file with any of the settings below (snake_case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub data_path: Option<PathBuf>,
    /// Department filter; an empty string keeps every row.
    #[arg(long)]
    pub department: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    #[arg(long)]
    pub target_column: Option<String>,
    #[arg(long, value_enum)]
    pub classifier: Option<ClassifierKind>,
    /// Regularization strength, or a comma-separated grid.
    #[arg(long = "c", value_delimiter = ',')]
    pub c: Option<Vec<f64>>,
    /// Number of diverse explanations.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub margin: Option<f64>,
    /// Per-feature cost weights as `Name=value`, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_weight)]
    pub weights: Option<Vec<(String, f64)>>,
    /// Features that may not be changed.
    #[arg(long, value_delimiter = ',')]
    pub blacklist: Option<Vec<String>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub split_ratio: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Coverage a candidate needs before its cost decides the C choice.
    #[arg(long)]
    pub coverage_target: Option<f64>,
    /// Fix the logistic L2 strength instead of tuning it.
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
}

fn parse_weight(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected Name=value, got {s:?}"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("bad weight for {name}: {e}"))?;
    Ok((name.trim().to_string(), value))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data_path: PathBuf,
    pub department: String,
    pub features: Vec<String>,
    pub target_column: String,
    pub classifier: ClassifierKind,
    pub c_grid: Vec<f64>,
    pub k: usize,
    pub margin: f64,
    pub weights: BTreeMap<String, f64>,
    pub blacklist: Vec<String>,
    pub seed: u64,
    pub split_ratio: f64,
    pub output_dir: PathBuf,
    pub coverage_target: f64,
    pub l2: Option<f64>,
    pub n_trees: Option<usize>,
    pub max_depth: Option<usize>,
}

impl RunConfig {
    pub fn resolve(args: &ConfigArgs) -> Result<RunConfig> {
        let file = match &args.config {
            Some(path) => load_file(path)?,
            None => ConfigFile::default(),
        };
        let cfg = RunConfig {
            data_path: args
                .data_path
                .clone()
                .or(file.data_path)
                .context("no data path given (use --data-path or data_path in the config file)")?,
            department: args
                .department
                .clone()
                .or(file.department)
                .unwrap_or_else(|| DEFAULT_DEPARTMENT.to_string()),
            features: args
                .features
                .clone()
                .or(file.features)
                .unwrap_or_else(|| DEFAULT_FEATURES.iter().map(|s| s.to_string()).collect()),
            target_column: args
                .target_column
                .clone()
                .or(file.target_column)
                .unwrap_or_else(|| DEFAULT_TARGET.to_string()),
            classifier: args
                .classifier
                .or(file.classifier)
                .unwrap_or(ClassifierKind::Logistic),
            c_grid: args
                .c
                .clone()
                .or(file.c.map(OneOrMany::into_vec))
                .unwrap_or_else(|| DEFAULT_C_GRID.to_vec()),
            k: args.k.or(file.k).unwrap_or(DEFAULT_K),
            margin: args.margin.or(file.margin).unwrap_or(DEFAULT_MARGIN),
            weights: args
                .weights
                .clone()
                .map(|w| w.into_iter().collect())
                .or(file.weights)
                .unwrap_or_default(),
            blacklist: args.blacklist.clone().or(file.blacklist).unwrap_or_default(),
            seed: args.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            split_ratio: args
                .split_ratio
                .or(file.split_ratio)
                .unwrap_or(DEFAULT_SPLIT_RATIO),
            output_dir: args
                .output_dir
                .clone()
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            coverage_target: args
                .coverage_target
                .or(file.coverage_target)
                .unwrap_or(DEFAULT_COVERAGE_TARGET),
            l2: args.l2.or(file.l2),
            n_trees: args.n_trees.or(file.n_trees),
            max_depth: args.max_depth.or(file.max_depth),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.features.is_empty(), "at least one feature is required");
        for (i, f) in self.features.iter().enumerate() {
            ensure!(!self.features[..i].contains(f), "feature {f:?} listed twice");
        }
        ensure!(self.k >= 1, "k must be >= 1");
        ensure!(!self.c_grid.is_empty(), "the C grid is empty");
        if let Some(c) = self.c_grid.iter().find(|&&c| !(c > 0.0 && c.is_finite())) {
            bail!("C must be a positive finite number, got {c}");
        }
        ensure!(self.margin >= 0.0, "margin must be >= 0");
        ensure!(
            self.split_ratio > 0.0 && self.split_ratio < 1.0,
            "split ratio must lie in (0, 1)"
        );
        ensure!(
            (0.0..=1.0).contains(&self.coverage_target),
            "coverage target must lie in [0, 1]"
        );
        for (name, w) in &self.weights {
            ensure!(self.features.contains(name), "weight given for unknown feature {name:?}");
            ensure!(*w > 0.0 && w.is_finite(), "weight for {name} must be positive");
        }
        for name in &self.blacklist {
            ensure!(self.features.contains(name), "black-listed feature {name:?} is not a selected feature");
        }
        if let Some(l2) = self.l2 {
            ensure!(l2 >= 0.0, "l2 must be >= 0");
        }
        ensure!(self.n_trees != Some(0), "n_trees must be >= 1");
        ensure!(self.max_depth != Some(0), "max_depth must be >= 1");
        Ok(())
    }

    /// Cost weights in feature order, 1 where none was given.
    pub fn cost_weights(&self) -> Vec<f64> {
        self.features
            .iter()
            .map(|f| self.weights.get(f).copied().unwrap_or(1.0))
            .collect()
    }

    pub fn expected_columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = self.features.iter().map(String::as_str).collect();
        cols.push(&self.target_column);
        if !self.department.is_empty() {
            cols.push(groupcf::dataset::DEPARTMENT_COLUMN);
        }
        cols
    }
}

fn load_file(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}
