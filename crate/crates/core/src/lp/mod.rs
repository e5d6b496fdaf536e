//! Exact group counterfactual for linear classifiers.
//!
//! For `score(x) = w.x + b` the group problem is the linear program
//!
//! ```text
//!   min  sum_j c_j |delta_j| + C sum_i xi_i
//!   s.t. y (w.delta + w.x_i + b) >= margin - xi_i,   xi_i >= 0,
//! ```
//!
//! with `delta = delta_plus - delta_minus` split into nonnegative parts and
//! black-listed features given no variables at all.

pub mod simplex;

use ndarray::{Array1, Array2, Axis};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::general::GroupDelta;
use crate::models::{LinearScorer, Scorer};
use simplex::{LpOptimum, StandardFormLp};

/// Feasibility slack allowed on recovered solutions.
const FEAS_TOL: f64 = 1e-7;
/// Relative primal/dual objective gap accepted as optimal.
const GAP_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupLpProblem {
    pub scorer: LinearScorer,
    pub instances: Array2<f64>,
    pub target: Label,
    /// Price of one unit of slack (the regularization strength `C`).
    pub c: f64,
    /// Per-feature weights of the L1 cost.
    pub cost_weights: Vec<f64>,
    /// `false` marks a black-listed feature.
    pub mask: Vec<bool>,
    pub margin: f64,
}

impl GroupLpProblem {
    /// Unit cost weights, no mask, retention target.
    pub fn new(scorer: LinearScorer, instances: Array2<f64>, c: f64, margin: f64) -> Self {
        let d = scorer.dim();
        GroupLpProblem {
            scorer,
            instances,
            target: Label::Retention,
            c,
            cost_weights: vec![1.0; d],
            mask: vec![true; d],
            margin,
        }
    }

    pub fn with_mask(mut self, mask: Vec<bool>) -> Self {
        self.mask = mask;
        self
    }

    pub fn with_cost_weights(mut self, weights: Vec<f64>) -> Self {
        self.cost_weights = weights;
        self
    }

    pub fn dim(&self) -> usize {
        self.scorer.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        if self.instances.ncols() != d && self.instances.nrows() > 0 {
            return Err(Error::Dimension(format!(
                "instances have {} features, classifier has {d}",
                self.instances.ncols()
            )));
        }
        if self.cost_weights.len() != d || self.mask.len() != d {
            return Err(Error::Dimension(format!(
                "cost weights ({}) and mask ({}) must have {d} entries",
                self.cost_weights.len(),
                self.mask.len()
            )));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::InvalidParameter(format!("C must be >= 0, got {}", self.c)));
        }
        if let Some(w) = self.cost_weights.iter().find(|&&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!("cost weights must be > 0, got {w}")));
        }
        if !(self.margin >= 0.0) {
            return Err(Error::InvalidParameter(format!("margin must be >= 0, got {}", self.margin)));
        }
        Ok(())
    }

    /// Unconstrained signed score deficit `margin - y (w.x_i + b)` per instance.
    pub fn deficits(&self) -> Vec<f64> {
        let y = self.target.sign();
        self.instances
            .axis_iter(Axis(0))
            .map(|x| self.margin - y * self.scorer.score(x))
            .collect()
    }
}

/// Role of one LP column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpVariable {
    Increase(usize),
    Decrease(usize),
    Slack(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupLp {
    pub lp: StandardFormLp,
    pub variables: Vec<LpVariable>,
}

pub fn build_group_lp(problem: &GroupLpProblem) -> Result<GroupLp> {
    problem.validate()?;
    let y = problem.target.sign();
    let w = &problem.scorer.weights;
    let m = problem.instances.nrows();

    let mut variables = Vec::new();
    let mut costs = Vec::new();
    for j in (0..problem.dim()).filter(|&j| problem.mask[j]) {
        variables.push(LpVariable::Increase(j));
        costs.push(problem.cost_weights[j]);
        variables.push(LpVariable::Decrease(j));
        costs.push(problem.cost_weights[j]);
    }
    for i in 0..m {
        variables.push(LpVariable::Slack(i));
        costs.push(problem.c);
    }

    let rhs = problem.deficits();
    let rows = (0..m)
        .map(|i| {
            variables
                .iter()
                .map(|v| match *v {
                    LpVariable::Increase(j) => y * w[j],
                    LpVariable::Decrease(j) => -y * w[j],
                    LpVariable::Slack(k) if k == i => 1.0,
                    LpVariable::Slack(_) => 0.0,
                })
                .collect()
        })
        .collect();

    Ok(GroupLp {
        lp: StandardFormLp { costs, rows, rhs },
        variables,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupLpSolution {
    pub delta: Array1<f64>,
    pub slacks: Vec<f64>,
    pub objective: f64,
    pub flipped: Vec<bool>,
}

impl GroupLpSolution {
    pub fn coverage(&self) -> f64 {
        if self.flipped.is_empty() {
            return 0.0;
        }
        self.flipped.iter().filter(|&&f| f).count() as f64 / self.flipped.len() as f64
    }

    pub fn into_group_delta(self, problem: &GroupLpProblem) -> GroupDelta {
        GroupDelta {
            delta: self.delta,
            mask: problem.mask.clone(),
            objective: self.objective,
            flipped: self.flipped,
            slacks: Some(self.slacks),
            trace: vec![self.objective],
        }
    }
}

/// Solves the group LP to optimality and records which instances flip.
pub fn solve_group_lp(problem: &GroupLpProblem) -> Result<GroupLpSolution> {
    let built = build_group_lp(problem)?;
    let fail = |reason: String| Error::Solver {
        variables: built.lp.n_variables(),
        constraints: built.lp.n_constraints(),
        reason,
    };
    let opt: LpOptimum = simplex::solve(&built.lp).map_err(|e| fail(e.to_string()))?;

    let gap = (opt.primal_objective - opt.dual_objective).abs();
    if gap > GAP_TOL * (1.0 + opt.primal_objective.abs()) {
        return Err(fail(format!("duality gap {gap:.3e} after {} pivots", opt.pivots)));
    }
    let violation = built.lp.max_violation(&opt.primal);
    if violation > FEAS_TOL {
        return Err(fail(format!("constraint violation {violation:.3e}")));
    }

    let mut delta = Array1::zeros(problem.dim());
    let mut slacks = vec![0.0; problem.instances.nrows()];
    for (v, &z) in built.variables.iter().zip(&opt.primal) {
        match *v {
            LpVariable::Increase(j) => delta[j] += z,
            LpVariable::Decrease(j) => delta[j] -= z,
            LpVariable::Slack(i) => slacks[i] = z,
        }
    }

    let y = problem.target.sign();
    let flipped = problem
        .instances
        .axis_iter(Axis(0))
        .map(|x| y * problem.scorer.score((&x + &delta).view()) >= 0.0)
        .collect();
    let objective = delta
        .iter()
        .zip(&problem.cost_weights)
        .map(|(d, c): (&f64, &f64)| c * d.abs())
        .sum::<f64>()
        + problem.c * slacks.iter().sum::<f64>();

    Ok(GroupLpSolution {
        delta,
        slacks,
        objective,
        flipped,
    })
}
