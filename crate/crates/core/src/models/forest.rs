use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Scorer;
use crate::dataset::{Label, PreparedDataset};
use crate::error::{Error, Result};

/// Tree node. Splits send `x[feature] <= threshold` to `left`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Fraction of retention rows that reached the leaf.
    Leaf { value: f64 },
}

/// Axis-aligned tree stored as a flat node array rooted at index 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf_value(&self, x: ArrayView1<f64>) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Bagged CART ensemble. `score(x) = mean leaf value - 0.5`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestScorer {
    pub n_features: usize,
    pub trees: Vec<DecisionTree>,
}

impl ForestScorer {
    pub fn validate(&self, d: usize) -> Result<()> {
        if self.n_features != d {
            return Err(Error::Dimension(format!(
                "forest expects {} features, schema has {d}",
                self.n_features
            )));
        }
        if self.trees.is_empty() {
            return Err(Error::InvalidParameter("forest has no trees".into()));
        }
        for (t, tree) in self.trees.iter().enumerate() {
            if tree.nodes.is_empty() {
                return Err(Error::InvalidParameter(format!("tree {t} is empty")));
            }
            for node in &tree.nodes {
                match *node {
                    Node::Split {
                        feature,
                        left,
                        right,
                        ..
                    } => {
                        if feature >= d || left >= tree.nodes.len() || right >= tree.nodes.len() {
                            return Err(Error::InvalidParameter(format!(
                                "tree {t} has an out-of-range split"
                            )));
                        }
                    }
                    Node::Leaf { value } if !(0.0..=1.0).contains(&value) => {
                        return Err(Error::InvalidParameter(format!(
                            "tree {t} has leaf value {value} outside [0, 1]"
                        )));
                    }
                    Node::Leaf { .. } => {}
                }
            }
        }
        Ok(())
    }

    fn mean_leaf(&self, x: ArrayView1<f64>) -> f64 {
        self.trees.iter().map(|t| t.leaf_value(x)).sum::<f64>() / self.trees.len() as f64
    }
}

impl Scorer for ForestScorer {
    fn dim(&self) -> usize {
        self.n_features
    }

    fn score(&self, x: ArrayView1<f64>) -> f64 {
        self.mean_leaf(x) - 0.5
    }

    fn probability(&self, x: ArrayView1<f64>) -> Option<f64> {
        Some(self.mean_leaf(x))
    }
}

/// Trains `n_trees` Gini CART trees, each on a uniform bootstrap resample.
pub fn train_forest(
    train: &PreparedDataset,
    n_trees: usize,
    max_depth: usize,
    seed: u64,
) -> Result<ForestScorer> {
    if n_trees < 1 {
        return Err(Error::InvalidParameter("n_trees must be >= 1".into()));
    }
    if max_depth < 1 {
        return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
    }
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "forest needs at least 2 rows, got {n}"
        )));
    }
    let positive: Vec<bool> = train.y.iter().map(|&l| l == Label::Retention).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let trees = (0..n_trees)
        .map(|_| {
            let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            let mut builder = TreeBuilder {
                x: &train.x,
                positive: &positive,
                max_depth,
                nodes: Vec::new(),
            };
            builder.grow(sample, 0);
            DecisionTree {
                nodes: builder.nodes,
            }
        })
        .collect();
    Ok(ForestScorer {
        n_features: train.dim(),
        trees,
    })
}

struct TreeBuilder<'a> {
    x: &'a Array2<f64>,
    positive: &'a [bool],
    max_depth: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

impl TreeBuilder<'_> {
    /// Appends the subtree for `rows` and returns its root index.
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let n = rows.len();
        let pos = rows.iter().filter(|&&r| self.positive[r]).count();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: pos as f64 / n as f64,
        });
        if depth >= self.max_depth || pos == 0 || pos == n {
            return id;
        }
        let Some(split) = self.best_split(&rows, pos) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.x[[i, split.feature]] <= split.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&self, rows: &[usize], pos: usize) -> Option<BestSplit> {
        let n = rows.len();
        let parent = gini(pos, n);
        let mut best: Option<BestSplit> = None;
        let mut sorted = rows.to_vec();
        for feature in 0..self.x.ncols() {
            sorted.sort_by(|&a, &b| self.x[[a, feature]].total_cmp(&self.x[[b, feature]]));
            let mut left_pos = 0;
            for k in 1..n {
                if self.positive[sorted[k - 1]] {
                    left_pos += 1;
                }
                let lo = self.x[[sorted[k - 1], feature]];
                let hi = self.x[[sorted[k], feature]];
                if lo == hi {
                    continue;
                }
                let impurity = (k as f64 * gini(left_pos, k)
                    + (n - k) as f64 * gini(pos - left_pos, n - k))
                    / n as f64;
                let bound = best.as_ref().map_or(parent, |b| b.impurity);
                if impurity < bound - 1e-12 {
                    best = Some(BestSplit {
                        feature,
                        threshold: 0.5 * (lo + hi),
                        impurity,
                    });
                }
            }
        }
        best
    }
}
