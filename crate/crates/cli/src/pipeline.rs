//! Steps shared by several commands.

use anyhow::{ensure, Context, Result};
use groupcf::dataset::{load_csv, prepare, Selection};
use groupcf::models::select_attrition_set;
use groupcf::{InstanceSet, PreparedDataset};

use crate::artifacts::TrainedArtifacts;
use crate::config::RunConfig;

pub fn load_selection(cfg: &RunConfig) -> Result<Selection> {
    let raw = load_csv(&cfg.data_path, &cfg.expected_columns())
        .with_context(|| format!("loading {}", cfg.data_path.display()))?;
    log::info!(
        "{}: {} rows, {} columns",
        cfg.data_path.display(),
        raw.n_rows(),
        raw.columns().len()
    );
    let selection = prepare(&raw, &cfg.department, &cfg.features, &cfg.target_column)
        .with_context(|| format!("preparing {}", cfg.data_path.display()))?;
    Ok(selection)
}

/// The department rows the trained model predicts as attrition.
pub fn attrition_set(cfg: &RunConfig, trained: &TrainedArtifacts) -> Result<InstanceSet> {
    ensure!(
        cfg.features == trained.model.feature_names,
        "configured features {:?} differ from the model's {:?}",
        cfg.features,
        trained.model.feature_names
    );
    let selection = load_selection(cfg)?;
    let data = PreparedDataset::from_selection(&selection, &trained.scaler.schema)?;
    Ok(select_attrition_set(&trained.model.model, &data)?)
}
