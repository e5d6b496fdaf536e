//! Model-agnostic group counterfactuals.
//!
//! Minimizes `sum_j c_j |delta_j| + C sum_i loss(score(x_i + M delta))` over a
//! shared `delta`, where `M` zeroes black-listed coordinates. Differentiable
//! scorers use accelerated proximal gradient; piecewise-constant scorers use
//! cyclic coordinate search over a fixed grid of moves.

use std::collections::BTreeSet;

use ndarray::{Array1, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::diversity::support;
use crate::error::{Error, Result};
use crate::models::{sigmoid, InstanceSet, Scorer};

/// An accepted step that lowers the objective by less than `OBJECTIVE_TOL`
/// and moves no coordinate by more than `STEP_TOL` ends proximal gradient.
const OBJECTIVE_TOL: f64 = 1e-9;
const STEP_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `max(0, margin - y s)^2` on the signed score `s`.
    SquaredHinge,
    /// `-ln p(y)` using the scorer's retention probability (logistic link of
    /// the score when the scorer has none).
    CrossEntropy,
}

/// Default per-feature moves (standardized units) tried by coordinate search.
pub const DEFAULT_COORD_GRID: [f64; 11] = [0.0, 0.25, -0.25, 0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 4.0, -4.0];

#[derive(Clone, Debug, PartialEq)]
pub struct PenalizedConfig {
    pub c: f64,
    pub loss: LossKind,
    pub cost_weights: Vec<f64>,
    /// `false` marks a black-listed feature.
    pub mask: Vec<bool>,
    pub margin: f64,
    pub target: Label,
    /// Iterations of proximal gradient, or full cycles of coordinate search.
    pub max_iter: usize,
    /// Initial proximal step; backtracking shrinks it as needed.
    pub step_size: f64,
    pub coord_grid: Vec<f64>,
    /// Recorded for reproducibility. Both strategies are deterministic and
    /// coordinate search visits features in index order.
    pub seed: u64,
}

impl PenalizedConfig {
    pub fn new(d: usize, c: f64) -> Self {
        PenalizedConfig {
            c,
            loss: LossKind::SquaredHinge,
            cost_weights: vec![1.0; d],
            mask: vec![true; d],
            margin: crate::DEFAULT_MARGIN,
            target: Label::Retention,
            max_iter: 100_000,
            step_size: 1.0,
            coord_grid: DEFAULT_COORD_GRID.to_vec(),
            seed: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.mask.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!("C must be > 0, got {}", self.c)));
        }
        if self.cost_weights.len() != self.mask.len() {
            return Err(Error::Dimension("cost weights and mask differ in length".into()));
        }
        if let Some(w) = self.cost_weights.iter().find(|&&w| !(w > 0.0)) {
            return Err(Error::InvalidParameter(format!("cost weights must be > 0, got {w}")));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidParameter("margin must be >= 0".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidParameter("step size must be > 0".into()));
        }
        if self.coord_grid.is_empty() || !self.coord_grid.contains(&0.0) {
            return Err(Error::InvalidParameter("coordinate grid must contain 0".into()));
        }
        Ok(())
    }

    fn loss(&self, score: f64, probability: Option<f64>) -> f64 {
        let y = self.target.sign();
        match self.loss {
            LossKind::SquaredHinge => (self.margin - y * score).max(0.0).powi(2),
            LossKind::CrossEntropy => {
                let p = probability.unwrap_or_else(|| sigmoid(score));
                let p = if self.target == Label::Retention { p } else { 1.0 - p };
                -p.max(1e-300).ln()
            }
        }
    }

    /// Derivative of the loss with respect to the score.
    fn loss_slope(&self, score: f64) -> f64 {
        let y = self.target.sign();
        match self.loss {
            LossKind::SquaredHinge => -2.0 * y * (self.margin - y * score).max(0.0),
            LossKind::CrossEntropy => -y * sigmoid(-y * score),
        }
    }

    fn l1(&self, delta: &Array1<f64>) -> f64 {
        delta
            .iter()
            .zip(&self.cost_weights)
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|((d, c), _)| c * d.abs())
            .sum()
    }

    fn project(&self, delta: &Array1<f64>) -> Array1<f64> {
        Array1::from_iter(delta.iter().zip(&self.mask).map(|(&d, &m)| if m { d } else { 0.0 }))
    }
}

/// One shared intervention with its objective and per-instance outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupDelta {
    pub delta: Array1<f64>,
    pub mask: Vec<bool>,
    pub objective: f64,
    /// Whether each instance reaches the target class after the move.
    pub flipped: Vec<bool>,
    /// LP slacks, or hinge residuals `max(0, margin - y s)` for the penalized path.
    pub slacks: Option<Vec<f64>>,
    /// Objective after each iteration (non-increasing).
    pub trace: Vec<f64>,
}

impl GroupDelta {
    pub fn coverage(&self) -> f64 {
        if self.flipped.is_empty() {
            return 0.0;
        }
        self.flipped.iter().filter(|&&f| f).count() as f64 / self.flipped.len() as f64
    }

    pub fn n_flipped(&self) -> usize {
        self.flipped.iter().filter(|&&f| f).count()
    }

    pub fn support(&self, tol: f64) -> BTreeSet<usize> {
        support(self.delta.view(), tol)
    }
}

/// Penalized group objective. Masked coordinates of `delta` are zeroed before
/// both the cost and the loss are evaluated.
///
/// Panics if `delta`, the instances, the scorer and `cfg` disagree on `d`.
pub fn penalized_objective<S: Scorer + ?Sized>(
    delta: ArrayView1<f64>,
    instances: &InstanceSet,
    scorer: &S,
    cfg: &PenalizedConfig,
) -> f64 {
    assert_eq!(delta.len(), cfg.dim(), "delta / config dimension mismatch");
    assert!(instances.is_empty() || instances.dim() == cfg.dim(), "instance dimension mismatch");
    let delta = cfg.project(&delta.to_owned());
    cfg.l1(&delta) + cfg.c * loss_sum(&delta, instances, scorer, cfg)
}

fn loss_sum<S: Scorer + ?Sized>(
    delta: &Array1<f64>,
    instances: &InstanceSet,
    scorer: &S,
    cfg: &PenalizedConfig,
) -> f64 {
    instances
        .x()
        .axis_iter(Axis(0))
        .map(|x| {
            let moved = &x + delta;
            let probability = match cfg.loss {
                LossKind::CrossEntropy => scorer.probability(moved.view()),
                LossKind::SquaredHinge => None,
            };
            cfg.loss(scorer.score(moved.view()), probability)
        })
        .sum()
}

/// Minimizes the penalized objective, dispatching on whether the scorer
/// exposes a gradient.
pub fn solve_penalized<S: Scorer + ?Sized>(
    instances: &InstanceSet,
    scorer: &S,
    cfg: &PenalizedConfig,
) -> Result<GroupDelta> {
    cfg.validate()?;
    if scorer.dim() != cfg.dim() || (!instances.is_empty() && instances.dim() != cfg.dim()) {
        return Err(Error::Dimension(format!(
            "scorer has {} features, config {}, instances {}",
            scorer.dim(),
            cfg.dim(),
            instances.dim()
        )));
    }
    let (delta, trace) = if scorer.is_differentiable() {
        proximal_gradient(instances, scorer, cfg)
    } else {
        coordinate_search(instances, scorer, cfg)
    };
    Ok(finish(delta, trace, instances, scorer, cfg))
}

fn finish<S: Scorer + ?Sized>(
    delta: Array1<f64>,
    trace: Vec<f64>,
    instances: &InstanceSet,
    scorer: &S,
    cfg: &PenalizedConfig,
) -> GroupDelta {
    let y = cfg.target.sign();
    let scores: Vec<f64> = instances
        .x()
        .axis_iter(Axis(0))
        .map(|x| scorer.score((&x + &delta).view()))
        .collect();
    GroupDelta {
        objective: penalized_objective(delta.view(), instances, scorer, cfg),
        flipped: scores.iter().map(|&s| Label::from_score(s) == cfg.target).collect(),
        slacks: Some(scores.iter().map(|&s| (cfg.margin - y * s).max(0.0)).collect()),
        mask: cfg.mask.clone(),
        delta,
        trace,
    }
}

/// Smooth part `C sum loss` and its gradient in `delta` (masked coordinates 0).
fn smooth_and_gradient<S: Scorer + ?Sized>(
    delta: &Array1<f64>,
    instances: &InstanceSet,
    scorer: &S,
    cfg: &PenalizedConfig,
) -> (f64, Array1<f64>) {
    let mut value = 0.0;
    let mut grad = Array1::zeros(delta.len());
    for x in instances.x().axis_iter(Axis(0)) {
        let moved = &x + delta;
        let s = scorer.score(moved.view());
        let p = match cfg.loss {
            LossKind::CrossEntropy => scorer.probability(moved.view()),
            LossKind::SquaredHinge => None,
        };
        value += cfg.loss(s, p);
        let slope = cfg.loss_slope(s);
        if slope != 0.0 {
            if let Some(g) = scorer.score_gradient(moved.view()) {
                grad.scaled_add(slope, &g);
            }
        }
    }
    grad *= cfg.c;
    for (g, &m) in grad.iter_mut().zip(&cfg.mask) {
        if !m {
            *g = 0.0;
        }
    }
    (cfg.c * value, grad)
}

fn soft_threshold(v: &Array1<f64>, step: f64, cfg: &PenalizedConfig) -> Array1<f64> {
    Array1::from_iter(v.iter().enumerate().map(|(j, &x)| {
        if !cfg.mask[j] {
            return 0.0;
        }
        let t = step * cfg.cost_weights[j];
        x.signum() * (x.abs() - t).max(0.0)
    }))
}

/// Monotone FISTA with backtracking and momentum restart.
fn proximal_gradient<S: Scorer + ?Sized>(
    instances: &InstanceSet,
    scorer: &S,
    cfg: &PenalizedConfig,
) -> (Array1<f64>, Vec<f64>) {
    let d = cfg.dim();
    let mut x = Array1::zeros(d);
    let (f0, _) = smooth_and_gradient(&x, instances, scorer, cfg);
    let mut fx = f0 + cfg.l1(&x);
    let mut trace = vec![fx];
    let mut y = x.clone();
    let mut t = 1.0f64;
    let mut lipschitz = 1.0 / cfg.step_size;

    for _ in 0..cfg.max_iter {
        let (fy, gy) = smooth_and_gradient(&y, instances, scorer, cfg);
        // let the step grow back a little before backtracking
        lipschitz = (lipschitz * 0.9).max(1e-12);
        let (z, fz_smooth) = loop {
            let z = soft_threshold(&(&y - &(&gy / lipschitz)), 1.0 / lipschitz, cfg);
            let diff = &z - &y;
            let (fz, _) = smooth_and_gradient(&z, instances, scorer, cfg);
            let model = fy + gy.dot(&diff) + 0.5 * lipschitz * diff.dot(&diff);
            if fz <= model + 1e-12 * fy.abs().max(1.0) || lipschitz > 1e300 {
                break (z, fz);
            }
            lipschitz *= 2.0;
        };
        let fz = fz_smooth + cfg.l1(&z);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        if fz <= fx {
            let decrease = fx - fz;
            let step = &z - &x;
            let moved = step.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            y = &z + &(&step * ((t - 1.0) / t_next));
            x = z;
            fx = fz;
            t = t_next;
            trace.push(fx);
            if decrease < OBJECTIVE_TOL && moved < STEP_TOL {
                break;
            }
        } else {
            // momentum overshot: restart from the incumbent
            y = x.clone();
            t = 1.0;
            trace.push(fx);
        }
    }
    (x, trace)
}

/// Cyclic coordinate search: each unmasked feature in turn takes the grid
/// move that lowers the objective most; stops after a cycle with no change.
fn coordinate_search<S: Scorer + ?Sized>(
    instances: &InstanceSet,
    scorer: &S,
    cfg: &PenalizedConfig,
) -> (Array1<f64>, Vec<f64>) {
    let d = cfg.dim();
    let mut delta = Array1::zeros(d);
    let mut best = penalized_objective(delta.view(), instances, scorer, cfg);
    let mut trace = vec![best];
    for _ in 0..cfg.max_iter {
        let mut improved = false;
        for j in (0..d).filter(|&j| cfg.mask[j]) {
            let base = delta[j];
            let mut choice = None;
            for &step in cfg.coord_grid.iter().filter(|&&s| s != 0.0) {
                delta[j] = base + step;
                let value = penalized_objective(delta.view(), instances, scorer, cfg);
                if value < best - 1e-12 {
                    best = value;
                    choice = Some(step);
                }
            }
            delta[j] = base + choice.unwrap_or(0.0);
            improved |= choice.is_some();
        }
        trace.push(best);
        if !improved {
            break;
        }
    }
    (delta, trace)
}
