//! Attrition classifiers behind one scoring contract, and selection of the
//! instances to explain.

mod forest;
mod logistic;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, PreparedDataset};
use crate::error::{Error, Result};

pub use forest::{train_forest, DecisionTree, ForestScorer, Node};
pub use logistic::{logistic_loss_and_gradient, train_logistic};

/// Version stamped into serialized model documents.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A binary classifier exposing a real-valued score. A positive score means
/// retention, and `predict(x) = sign(score(x))` with `sign(0) = +1`.
pub trait Scorer {
    fn dim(&self) -> usize;

    fn score(&self, x: ArrayView1<f64>) -> f64;

    fn predict(&self, x: ArrayView1<f64>) -> Label {
        Label::from_score(self.score(x))
    }

    /// Gradient of the score with respect to the input. `None` means the
    /// scorer is piecewise constant or otherwise has no useful gradient.
    fn score_gradient(&self, _x: ArrayView1<f64>) -> Option<Array1<f64>> {
        None
    }

    fn is_differentiable(&self) -> bool {
        false
    }

    /// Probability of retention, for scorers that define one.
    fn probability(&self, _x: ArrayView1<f64>) -> Option<f64> {
        None
    }
}

/// `score(x) = w . x + b`; the probability is the logistic link of the score.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearScorer {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearScorer {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        LinearScorer { weights, bias }
    }

    pub fn weights_view(&self) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.weights[..])
    }
}

impl Scorer for LinearScorer {
    fn dim(&self) -> usize {
        self.weights.len()
    }

    fn score(&self, x: ArrayView1<f64>) -> f64 {
        self.weights_view().dot(&x) + self.bias
    }

    fn score_gradient(&self, _x: ArrayView1<f64>) -> Option<Array1<f64>> {
        Some(Array1::from(self.weights.clone()))
    }

    fn is_differentiable(&self) -> bool {
        true
    }

    fn probability(&self, x: ArrayView1<f64>) -> Option<f64> {
        Some(sigmoid(self.score(x)))
    }
}

pub(crate) fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Any trained classifier, tagged by kind for serialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Logistic(LinearScorer),
    Forest(ForestScorer),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Logistic(_) => "logistic",
            Model::Forest(_) => "forest",
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Model::Logistic(m) if m.dim() != d => Err(Error::Dimension(format!(
                "linear model has {} weights, schema has {d} features",
                m.dim()
            ))),
            Model::Logistic(_) => Ok(()),
            Model::Forest(f) => f.validate(d),
        }
    }
}

impl Scorer for Model {
    fn dim(&self) -> usize {
        match self {
            Model::Logistic(m) => m.dim(),
            Model::Forest(m) => m.dim(),
        }
    }

    fn score(&self, x: ArrayView1<f64>) -> f64 {
        match self {
            Model::Logistic(m) => m.score(x),
            Model::Forest(m) => m.score(x),
        }
    }

    fn score_gradient(&self, x: ArrayView1<f64>) -> Option<Array1<f64>> {
        match self {
            Model::Logistic(m) => m.score_gradient(x),
            Model::Forest(m) => m.score_gradient(x),
        }
    }

    fn is_differentiable(&self) -> bool {
        match self {
            Model::Logistic(m) => m.is_differentiable(),
            Model::Forest(m) => m.is_differentiable(),
        }
    }

    fn probability(&self, x: ArrayView1<f64>) -> Option<f64> {
        match self {
            Model::Logistic(m) => m.probability(x),
            Model::Forest(m) => m.probability(x),
        }
    }
}

/// Versioned on-disk form of a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub model: Model,
}

impl ModelDocument {
    pub fn new(feature_names: Vec<String>, model: Model) -> Self {
        ModelDocument {
            format_version: MODEL_FORMAT_VERSION,
            feature_names,
            model,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        self.model.validate(self.feature_names.len())
    }
}

pub fn accuracy<S: Scorer + ?Sized>(scorer: &S, data: &PreparedDataset) -> f64 {
    if data.n_rows() == 0 {
        return 0.0;
    }
    let hits = data
        .x
        .axis_iter(Axis(0))
        .zip(&data.y)
        .filter(|(x, &y)| scorer.predict(x.view()) == y)
        .count();
    hits as f64 / data.n_rows() as f64
}

/// The instances predicted as attrition, in standardized units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRows", into = "InstanceRows")]
pub struct InstanceSet {
    x: Array2<f64>,
    row_ids: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRows {
    row_ids: Vec<usize>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<InstanceRows> for InstanceSet {
    type Error = String;

    fn try_from(raw: InstanceRows) -> std::result::Result<Self, String> {
        let d = raw.rows.first().map_or(0, Vec::len);
        if raw.rows.iter().any(|r| r.len() != d) || raw.rows.len() != raw.row_ids.len() {
            return Err("ragged instance rows".into());
        }
        let flat: Vec<f64> = raw.rows.into_iter().flatten().collect();
        let x = Array2::from_shape_vec((raw.row_ids.len(), d), flat).map_err(|e| e.to_string())?;
        Ok(InstanceSet {
            x,
            row_ids: raw.row_ids,
        })
    }
}

impl From<InstanceSet> for InstanceRows {
    fn from(set: InstanceSet) -> Self {
        InstanceRows {
            rows: set.x.rows().into_iter().map(|r| r.to_vec()).collect(),
            row_ids: set.row_ids,
        }
    }
}

impl InstanceSet {
    /// Wraps rows that `scorer` must predict as attrition.
    pub fn new<S: Scorer + ?Sized>(x: Array2<f64>, row_ids: Vec<usize>, scorer: &S) -> Result<Self> {
        if row_ids.len() != x.nrows() {
            return Err(Error::Dimension(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                x.nrows()
            )));
        }
        let set = InstanceSet { x, row_ids };
        set.verify(scorer)?;
        Ok(set)
    }

    pub fn verify<S: Scorer + ?Sized>(&self, scorer: &S) -> Result<()> {
        if self.x.ncols() != scorer.dim() && self.len() > 0 {
            return Err(Error::Dimension(format!(
                "instances have {} features, scorer expects {}",
                self.x.ncols(),
                scorer.dim()
            )));
        }
        for (i, row) in self.x.axis_iter(Axis(0)).enumerate() {
            if scorer.predict(row) != Label::Attrition {
                return Err(Error::InvalidParameter(format!(
                    "instance {} (source row {}) is not predicted as attrition",
                    i, self.row_ids[i]
                )));
            }
        }
        Ok(())
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// Rows of `data` that `scorer` labels attrition, order preserved.
pub fn select_attrition_set<S: Scorer + ?Sized>(
    scorer: &S,
    data: &PreparedDataset,
) -> Result<InstanceSet> {
    let keep: Vec<usize> = data
        .x
        .axis_iter(Axis(0))
        .enumerate()
        .filter(|(_, x)| scorer.predict(x.view()) == Label::Attrition)
        .map(|(i, _)| i)
        .collect();
    if keep.is_empty() {
        return Err(Error::NothingToExplain);
    }
    Ok(InstanceSet {
        x: data.x.select(Axis(0), &keep),
        row_ids: keep.iter().map(|&i| data.row_ids[i]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureSchema, Scaler};
    use ndarray::array;
    use proptest::prelude::*;

    fn dataset(x: Array2<f64>, y: Vec<Label>) -> PreparedDataset {
        let d = x.ncols();
        let scaler = Scaler {
            means: vec![0.0; d],
            stds: vec![1.0; d],
        };
        let names = (0..d).map(|j| format!("f{j}")).collect();
        PreparedDataset {
            row_ids: (0..x.nrows()).collect(),
            x,
            y,
            schema: FeatureSchema::new(names, &scaler).unwrap(),
        }
    }

    #[test]
    fn selects_rows_with_negative_score() {
        let scorer = LinearScorer::new(vec![1.0, 0.0], 0.0);
        let data = dataset(
            array![[-2.0, 0.0], [2.0, 0.0]],
            vec![Label::Attrition, Label::Retention],
        );
        let set = select_attrition_set(&scorer, &data).unwrap();
        assert_eq!(set.x(), &array![[-2.0, 0.0]]);
        assert_eq!(set.row_ids(), &[0]);
        assert!(set.x().rows().into_iter().all(|r| scorer.score(r) < 0.0));
    }

    #[test]
    fn nothing_to_explain() {
        let scorer = LinearScorer::new(vec![0.0], 1.0);
        let data = dataset(array![[1.0], [-1.0]], vec![Label::Retention; 2]);
        assert!(matches!(
            select_attrition_set(&scorer, &data),
            Err(Error::NothingToExplain)
        ));
    }

    #[test]
    fn zero_score_predicts_retention() {
        let scorer = LinearScorer::new(vec![1.0], 0.0);
        assert_eq!(scorer.predict(array![0.0].view()), Label::Retention);
    }

    #[test]
    fn instance_set_round_trips_and_reverifies() {
        let scorer = LinearScorer::new(vec![1.0, 0.0], 0.0);
        let set = InstanceSet::new(array![[-2.0, 1.0], [-0.5, 3.0]], vec![4, 9], &scorer).unwrap();
        let json = serde_json::to_string(&set).unwrap();
        let back: InstanceSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
        back.verify(&scorer).unwrap();

        let flipped = LinearScorer::new(vec![-1.0, 0.0], 0.0);
        assert!(back.verify(&flipped).is_err());
    }

    #[test]
    fn model_document_round_trip() {
        let doc = ModelDocument::new(
            vec!["a".into(), "b".into()],
            Model::Logistic(LinearScorer::new(vec![0.5, -1.25], 0.1)),
        );
        let json = serde_json::to_string(&doc).unwrap();
        assert!(json.contains("\"kind\":\"logistic\""));
        let back: ModelDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
        back.validate().unwrap();
    }

    proptest! {
        #[test]
        fn linear_predict_matches_score_sign(
            w in prop::collection::vec(-3.0f64..3.0, 3),
            b in -2.0f64..2.0,
            x in prop::collection::vec(-3.0f64..3.0, 3),
        ) {
            let s = LinearScorer::new(w, b);
            let x = Array1::from(x);
            prop_assert_eq!(s.predict(x.view()) == Label::Retention, s.score(x.view()) >= 0.0);
        }
    }
}
