//! Empirical robust loss, its gradient, the weighted-l1 objective and the
//! first-order suboptimality measure.

use ndarray::{Array1, ArrayView1, Zip};

use crate::data::Dataset;
use crate::error::{check_dim, Result};
use crate::loss::RobustLoss;

/// `(1/n) sum_i l_tau(r_i)`.
pub fn loss_from_residuals(loss: &RobustLoss, resid: ArrayView1<f64>) -> f64 {
    resid.iter().map(|&r| loss.value(r)).sum::<f64>() / resid.len() as f64
}

/// `-(1/n) X^T l_tau'(r)`.
pub fn gradient_from_residuals(
    data: &Dataset,
    loss: &RobustLoss,
    resid: ArrayView1<f64>,
) -> Array1<f64> {
    let n = data.n() as f64;
    let score = resid.mapv(|r| loss.deriv(r));
    let mut g = data.xt_dot(score.view());
    g.mapv_inplace(|v| -v / n);
    g
}

pub fn empirical_loss(data: &Dataset, loss: &RobustLoss, beta: ArrayView1<f64>) -> Result<f64> {
    let r = data.residuals(beta)?;
    Ok(loss_from_residuals(loss, r.view()))
}

pub fn empirical_gradient(
    data: &Dataset,
    loss: &RobustLoss,
    beta: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    let r = data.residuals(beta)?;
    Ok(gradient_from_residuals(data, loss, r.view()))
}

/// `sum_j lambda_j |beta_j|`.
pub fn weighted_l1(weights: ArrayView1<f64>, beta: ArrayView1<f64>) -> f64 {
    Zip::from(weights)
        .and(beta)
        .fold(0.0, |acc, &w, &b| acc + w * b.abs())
}

pub fn penalized_objective(
    data: &Dataset,
    loss: &RobustLoss,
    weights: ArrayView1<f64>,
    beta: ArrayView1<f64>,
) -> Result<f64> {
    check_dim("weight length", data.d(), weights.len())?;
    Ok(empirical_loss(data, loss, beta)? + weighted_l1(weights, beta))
}

/// `min_{xi in subdiff ||beta||_1} ||grad + weights o xi||_inf`, evaluated in
/// closed form from a precomputed gradient.
pub fn suboptimality_from_gradient(
    grad: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    beta: ArrayView1<f64>,
) -> f64 {
    Zip::from(grad)
        .and(weights)
        .and(beta)
        .fold(0.0_f64, |acc, &g, &w, &b| {
            let c = if b != 0.0 {
                (g + w * b.signum()).abs()
            } else {
                (g.abs() - w).max(0.0)
            };
            acc.max(c)
        })
}

pub fn suboptimality(
    data: &Dataset,
    loss: &RobustLoss,
    weights: ArrayView1<f64>,
    beta: ArrayView1<f64>,
) -> Result<f64> {
    check_dim("weight length", data.d(), weights.len())?;
    let g = empirical_gradient(data, loss, beta)?;
    Ok(suboptimality_from_gradient(g.view(), weights, beta))
}
