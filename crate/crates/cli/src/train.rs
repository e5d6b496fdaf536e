use anyhow::{Context, Result};
use groupcf::dataset::split_indices;
use groupcf::models::{accuracy, train_forest, train_logistic, Model, ModelDocument};
use groupcf::{FeatureSchema, PreparedDataset, Scaler};

use crate::artifacts::{
    write_json, Hyperparameters, Manifest, ScalerDocument, TuningResult, FORMAT_VERSION, MANIFEST_FILE,
    MODEL_FILE, SCALER_FILE,
};
use crate::config::{ClassifierKind, RunConfig};
use crate::pipeline::load_selection;

pub const L2_GRID: [f64; 5] = [0.0, 0.001, 0.01, 0.1, 1.0];
pub const N_TREES_GRID: [usize; 2] = [25, 50];
pub const MAX_DEPTH_GRID: [usize; 3] = [3, 5, 8];
const LOGISTIC_MAX_ITER: usize = 20_000;
const LOGISTIC_TOL: f64 = 1e-6;

pub struct TrainOutcome {
    pub manifest: Manifest,
    pub model: ModelDocument,
}

pub fn run(cfg: &RunConfig) -> Result<TrainOutcome> {
    let selection = load_selection(cfg)?;
    let (train_idx, test_idx) = split_indices(selection.n_rows(), cfg.split_ratio, cfg.seed)?;
    let train_sel = selection.take(&train_idx);
    let test_sel = selection.take(&test_idx);

    let scaler = Scaler::fit(&train_sel.x).context("fitting the scaler on the training split")?;
    let schema = FeatureSchema::new(cfg.features.clone(), &scaler)?;
    let train = PreparedDataset::from_selection(&train_sel, &schema)?.undersample_majority(cfg.seed)?;
    let test = PreparedDataset::from_selection(&test_sel, &schema)?;
    let (neg, pos) = train.class_counts();
    log::info!("training on {} balanced rows ({neg} attrition / {pos} retention), testing on {}", train.n_rows(), test.n_rows());

    let mut tuning = Vec::new();
    let mut best: Option<(Model, Hyperparameters, f64)> = None;
    for params in grid(cfg) {
        let model = fit(&train, &params, cfg.seed)?;
        let acc = accuracy(&model, &test);
        log::info!("{params:?}: test accuracy {acc:.4}");
        tuning.push(TuningResult {
            params: params.clone(),
            test_accuracy: acc,
        });
        if best.as_ref().map_or(true, |(_, _, b)| acc > *b) {
            best = Some((model, params, acc));
        }
    }
    let (model, selected, test_accuracy) = best.expect("hyper-parameter grid is never empty");

    let document = ModelDocument::new(cfg.features.clone(), model);
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        data_path: cfg.data_path.display().to_string(),
        department: cfg.department.clone(),
        target_column: cfg.target_column.clone(),
        features: cfg.features.clone(),
        classifier: cfg.classifier.as_str().to_string(),
        seed: cfg.seed,
        split_ratio: cfg.split_ratio,
        n_rows: selection.n_rows(),
        train_row_ids: train_sel.row_ids.clone(),
        test_row_ids: test_sel.row_ids.clone(),
        balanced_train_row_ids: train.row_ids.clone(),
        tuning,
        selected,
        test_accuracy,
    };

    write_json(&cfg.output_dir.join(MODEL_FILE), &document)?;
    write_json(&cfg.output_dir.join(SCALER_FILE), &ScalerDocument::new(schema))?;
    write_json(&cfg.output_dir.join(MANIFEST_FILE), &manifest)?;
    Ok(TrainOutcome {
        manifest,
        model: document,
    })
}

fn grid(cfg: &RunConfig) -> Vec<Hyperparameters> {
    match cfg.classifier {
        ClassifierKind::Logistic => {
            let l2s = cfg.l2.map_or(L2_GRID.to_vec(), |l2| vec![l2]);
            l2s.into_iter().map(|l2| Hyperparameters::Logistic { l2 }).collect()
        }
        ClassifierKind::Forest => {
            let trees = cfg.n_trees.map_or(N_TREES_GRID.to_vec(), |n| vec![n]);
            let depths = cfg.max_depth.map_or(MAX_DEPTH_GRID.to_vec(), |d| vec![d]);
            trees
                .iter()
                .flat_map(|&n_trees| depths.iter().map(move |&max_depth| Hyperparameters::Forest { n_trees, max_depth }))
                .collect()
        }
    }
}

fn fit(train: &PreparedDataset, params: &Hyperparameters, seed: u64) -> Result<Model> {
    Ok(match *params {
        Hyperparameters::Logistic { l2 } => Model::Logistic(train_logistic(train, l2, LOGISTIC_MAX_ITER, LOGISTIC_TOL)?),
        Hyperparameters::Forest { n_trees, max_depth } => Model::Forest(train_forest(train, n_trees, max_depth, seed)?),
    })
}
