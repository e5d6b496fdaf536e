use log::warn;
use ndarray::{Array1, Array2, Axis};

use super::LinearScorer;
use crate::dataset::{Label, PreparedDataset};
use crate::error::{Error, Result};

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean logistic loss plus `l2 / 2 * |w|^2` (bias unpenalized), together with
/// its gradient with respect to `(w, b)`.
pub fn logistic_loss_and_gradient(
    w: &Array1<f64>,
    b: f64,
    x: &Array2<f64>,
    y: &[Label],
    l2: f64,
) -> (f64, Array1<f64>, f64) {
    let n = x.nrows() as f64;
    let mut loss = 0.0;
    let mut grad_w = Array1::zeros(w.len());
    let mut grad_b = 0.0;
    for (row, label) in x.axis_iter(Axis(0)).zip(y) {
        let t = label.sign();
        let margin = t * (w.dot(&row) + b);
        loss += softplus(-margin);
        // d/ds softplus(-t s) = -t * sigmoid(-t s)
        let g = -t * super::sigmoid(-margin);
        grad_w.scaled_add(g, &row);
        grad_b += g;
    }
    loss /= n;
    grad_w /= n;
    grad_b /= n;
    loss += 0.5 * l2 * w.dot(w);
    grad_w.scaled_add(l2, w);
    (loss, grad_w, grad_b)
}

/// Fits an L2-regularized logistic regression by full-batch gradient descent
/// from zero, with step `1/L` for a Lipschitz bound `L` of the gradient.
pub fn train_logistic(
    train: &PreparedDataset,
    l2_strength: f64,
    max_iter: usize,
    tol: f64,
) -> Result<LinearScorer> {
    if !(l2_strength >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "l2 strength must be >= 0, got {l2_strength}"
        )));
    }
    let (neg, pos) = train.class_counts();
    if neg == 0 {
        return Err(Error::SingleClass("retention"));
    }
    if pos == 0 {
        return Err(Error::SingleClass("attrition"));
    }

    let x = &train.x;
    let n = x.nrows() as f64;
    let mean_sq_norm = x.rows().into_iter().map(|r| r.dot(&r) + 1.0).sum::<f64>() / n;
    let step = 1.0 / (0.25 * mean_sq_norm + l2_strength);

    let mut w = Array1::zeros(x.ncols());
    let mut b = 0.0;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..max_iter {
        let (_, gw, gb) = logistic_loss_and_gradient(&w, b, x, &train.y, l2_strength);
        grad_norm = gw.iter().fold(gb.abs(), |m, v| m.max(v.abs()));
        if grad_norm < tol {
            break;
        }
        w.scaled_add(-step, &gw);
        b -= step * gb;
    }
    if !(grad_norm < tol) {
        warn!(
            "logistic regression stopped after {max_iter} iterations with gradient norm {grad_norm:.3e}"
        );
    }
    Ok(LinearScorer::new(w.to_vec(), b))
}
