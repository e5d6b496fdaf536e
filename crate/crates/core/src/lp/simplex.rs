//! Dense tableau simplex for covering-type LPs
//!
//! ```text
//!     min  c.z   s.t.  A z >= r,  z >= 0,   with c >= 0.
//! ```
//!
//! The solver runs the primal simplex method on the dual
//! `max r.u  s.t.  A^T u <= c,  u >= 0`, whose slack basis is feasible
//! because `c >= 0`, so no phase one is needed. The primal solution is read
//! off the reduced costs of the dual slacks at optimality.

/// `min costs.z` subject to `rows[i].z >= rhs[i]` and `z >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardFormLp {
    pub costs: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl StandardFormLp {
    pub fn n_variables(&self) -> usize {
        self.costs.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rows.len()
    }

    pub fn objective(&self, z: &[f64]) -> f64 {
        self.costs.iter().zip(z).map(|(c, v)| c * v).sum()
    }

    /// Largest constraint violation `max(0, rhs_i - rows_i . z)`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(&self.rhs)
            .map(|(row, &r)| r - row.iter().zip(z).map(|(a, v)| a * v).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpOptimum {
    pub primal: Vec<f64>,
    pub dual: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub pivots: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimplexFailure {
    NegativeCost(usize),
    Infeasible,
    IterationLimit(usize),
    Malformed(String),
}

impl std::fmt::Display for SimplexFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SimplexFailure::NegativeCost(j) => write!(f, "variable {j} has a negative cost"),
            SimplexFailure::Infeasible => write!(f, "primal problem is infeasible"),
            SimplexFailure::IterationLimit(n) => write!(f, "no optimum after {n} pivots"),
            SimplexFailure::Malformed(msg) => write!(f, "{msg}"),
        }
    }
}

const PIVOT_EPS: f64 = 1e-11;
/// Degenerate pivots tolerated under Dantzig's rule before switching to Bland's.
const DEGENERATE_RUN: usize = 50;

pub fn solve(lp: &StandardFormLp) -> Result<LpOptimum, SimplexFailure> {
    let n = lp.n_variables();
    let m = lp.n_constraints();
    if lp.rhs.len() != m || lp.rows.iter().any(|r| r.len() != n) {
        return Err(SimplexFailure::Malformed("inconsistent LP dimensions".into()));
    }
    if let Some(j) = lp.costs.iter().position(|&c| !(c >= 0.0)) {
        return Err(SimplexFailure::NegativeCost(j));
    }

    // Dual tableau: one row per primal variable, columns [u (m) | s (n) | rhs].
    let width = m + n + 1;
    let mut t = vec![0.0; n * width];
    for k in 0..n {
        let row = &mut t[k * width..(k + 1) * width];
        for i in 0..m {
            row[i] = lp.rows[i][k];
        }
        row[m + k] = 1.0;
        row[width - 1] = lp.costs[k];
    }
    // Objective row holds reduced costs for maximization: entering needs < 0.
    let mut obj = vec![0.0; width];
    for i in 0..m {
        obj[i] = -lp.rhs[i];
    }
    let mut basis: Vec<usize> = (m..m + n).collect();

    let scale = lp.rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let opt_tol = 1e-12 * scale;
    let max_pivots = 50 * (m + n) + 1000;
    let mut pivots = 0;
    let mut degenerate = 0;

    loop {
        let bland = degenerate >= DEGENERATE_RUN;
        let entering = if bland {
            (0..m + n).find(|&j| obj[j] < -opt_tol)
        } else {
            (0..m + n)
                .filter(|&j| obj[j] < -opt_tol)
                .min_by(|&a, &b| obj[a].total_cmp(&obj[b]))
        };
        let Some(e) = entering else { break };

        let mut leave: Option<(usize, f64)> = None;
        for k in 0..n {
            let a = t[k * width + e];
            if a > PIVOT_EPS {
                let ratio = t[k * width + width - 1] / a;
                let better = match leave {
                    None => true,
                    Some((l, best)) => {
                        ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[k] < basis[l])
                    }
                };
                if better {
                    leave = Some((k, ratio));
                }
            }
        }
        // unbounded dual
        let Some((r, ratio)) = leave else {
            return Err(SimplexFailure::Infeasible);
        };
        if ratio.abs() <= 1e-15 {
            degenerate += 1;
        } else {
            degenerate = 0;
        }

        pivot(&mut t, &mut obj, width, n, r, e);
        basis[r] = e;
        pivots += 1;
        if pivots > max_pivots {
            return Err(SimplexFailure::IterationLimit(pivots));
        }
    }

    let mut dual = vec![0.0; m];
    for (k, &b) in basis.iter().enumerate() {
        if b < m {
            dual[b] = t[k * width + width - 1].max(0.0);
        }
    }
    let primal: Vec<f64> = (0..n).map(|k| obj[m + k].max(0.0)).collect();
    let dual_objective = lp.rhs.iter().zip(&dual).map(|(r, u)| r * u).sum();
    Ok(LpOptimum {
        primal_objective: lp.objective(&primal),
        primal,
        dual,
        dual_objective,
        pivots,
    })
}

fn pivot(t: &mut [f64], obj: &mut [f64], width: usize, rows: usize, r: usize, e: usize) {
    let p = t[r * width + e];
    for v in &mut t[r * width..(r + 1) * width] {
        *v /= p;
    }
    let pivot_row: Vec<f64> = t[r * width..(r + 1) * width].to_vec();
    for k in 0..rows {
        if k == r {
            continue;
        }
        let f = t[k * width + e];
        if f != 0.0 {
            for (v, pr) in t[k * width..(k + 1) * width].iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            t[k * width + e] = 0.0;
        }
    }
    let f = obj[e];
    if f != 0.0 {
        for (v, pr) in obj.iter_mut().zip(&pivot_row) {
            *v -= f * pr;
        }
        obj[e] = 0.0;
    }
}
