//! Local adaptive majorize-minimize (LAMM) solver for a single weighted-l1
//! penalized robust regression program
//!
//! ```text
//! minimize  L(beta) + sum_j lambda_j |beta_j|
//! ```
//!
//! Each iteration majorizes `L` locally by an isotropic quadratic with
//! coefficient `phi` around the current iterate, minimizes the majorizer plus
//! the penalty by soft-thresholding, and inflates `phi` by `gamma_u` until
//! the quadratic actually dominates `L` at the new point. The penalized
//! objective is therefore nonincreasing along the iterates.

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{check_dim, IrwError, Result};
use crate::loss::RobustLoss;
use crate::objective::{
    gradient_from_residuals, loss_from_residuals, suboptimality_from_gradient, weighted_l1,
};

pub const DEFAULT_PHI0: f64 = 1e-4;
pub const DEFAULT_GAMMA_U: f64 = 2.0;
/// Hard cap on `phi` inflations within one iteration.
pub const MAX_BACKTRACKS: usize = 100;

/// Relative slack for the local majorization test, absorbing rounding in the
/// comparison `F(beta_new) >= L(beta_new)`.
const MAJORIZATION_RTOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub phi0: f64,
    pub gamma_u: f64,
    pub eps: f64,
    pub max_inner_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            phi0: DEFAULT_PHI0,
            gamma_u: DEFAULT_GAMMA_U,
            eps: 1e-6,
            max_inner_iters: 10_000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi0 > 0.0 && self.phi0.is_finite()) {
            return Err(IrwError::InvalidParameter(format!(
                "phi0 must be positive, got {}",
                self.phi0
            )));
        }
        if !(self.gamma_u > 1.0 && self.gamma_u.is_finite()) {
            return Err(IrwError::InvalidParameter(format!(
                "gamma_u must exceed 1, got {}",
                self.gamma_u
            )));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(IrwError::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.max_inner_iters == 0 {
            return Err(IrwError::InvalidParameter(
                "max_inner_iters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted LAMM iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Penalized objective at the accepted iterate.
    pub objective: f64,
    /// Suboptimality at the accepted iterate.
    pub omega: f64,
    pub phi: f64,
    pub backtracks: usize,
    /// `F(beta_new; phi, beta_prev) - L(beta_new)` at acceptance.
    pub majorization_gap: f64,
    /// `||beta_new - beta_prev||_2`.
    pub step_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InnerTrace {
    pub initial_objective: f64,
    pub initial_omega: f64,
    pub iterations: Vec<IterationRecord>,
}

impl InnerTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.initial_objective).chain(self.iterations.iter().map(|r| r.objective))
    }

    pub fn final_omega(&self) -> f64 {
        self.iterations
            .last()
            .map_or(self.initial_omega, |r| r.omega)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub beta: Array1<f64>,
    pub omega: f64,
    pub converged: bool,
    /// Last accepted `phi`, or `phi0` if no iteration ran.
    pub phi: f64,
    pub trace: InnerTrace,
}

/// `sign(v_j) * max(|v_j| - t_j, 0)`.
pub fn soft_threshold(v: ArrayView1<f64>, thresholds: ArrayView1<f64>) -> Result<Array1<f64>> {
    check_dim("threshold length", v.len(), thresholds.len())?;
    Ok(Zip::from(v)
        .and(thresholds)
        .map_collect(|&x, &t| soft(x, t)))
}

#[inline]
fn soft(x: f64, t: f64) -> f64 {
    let m = x.abs() - t;
    if m > 0.0 {
        m.copysign(x)
    } else {
        0.0
    }
}

/// Isotropic quadratic majorizer
/// `F(beta; phi, anchor) = L(anchor) + <grad L(anchor), beta - anchor> + phi/2 ||beta - anchor||^2`.
pub fn majorizer_value(
    data: &Dataset,
    loss: &RobustLoss,
    beta: ArrayView1<f64>,
    phi: f64,
    anchor: ArrayView1<f64>,
) -> Result<f64> {
    check_dim("coefficient length", data.d(), beta.len())?;
    let r = data.residuals(anchor)?;
    let base = loss_from_residuals(loss, r.view());
    let g = gradient_from_residuals(data, loss, r.view());
    Ok(quadratic_model(base, g.view(), beta, anchor, phi))
}

fn quadratic_model(
    base: f64,
    grad: ArrayView1<f64>,
    beta: ArrayView1<f64>,
    anchor: ArrayView1<f64>,
    phi: f64,
) -> f64 {
    let (lin, sq) =
        Zip::from(grad)
            .and(beta)
            .and(anchor)
            .fold((0.0, 0.0), |(lin, sq), &g, &b, &a| {
                let d = b - a;
                (lin + g * d, sq + d * d)
            });
    base + lin + 0.5 * phi * sq
}

/// Current iterate with the quantities the next iteration needs.
struct State {
    beta: Array1<f64>,
    loss: f64,
    grad: Array1<f64>,
}

impl State {
    fn at(data: &Dataset, loss: &RobustLoss, beta: Array1<f64>) -> Result<State> {
        let r = data.residuals(beta.view())?;
        Ok(State {
            loss: loss_from_residuals(loss, r.view()),
            grad: gradient_from_residuals(data, loss, r.view()),
            beta,
        })
    }
}

/// Result of one LAMM iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct LammStep {
    pub beta: Array1<f64>,
    pub phi: f64,
    pub backtracks: usize,
}

/// One LAMM iteration from `beta_prev` with carried-over coefficient
/// `phi_prev`.
pub fn lamm_iteration(
    data: &Dataset,
    loss: &RobustLoss,
    weights: ArrayView1<f64>,
    beta_prev: ArrayView1<f64>,
    phi_prev: f64,
    cfg: &SolverConfig,
) -> Result<LammStep> {
    check_dim("weight length", data.d(), weights.len())?;
    let state = State::at(data, loss, beta_prev.to_owned())?;
    let (next, phi, backtracks, _) = step(data, loss, weights, &state, phi_prev, cfg)?;
    Ok(LammStep {
        beta: next.beta,
        phi,
        backtracks,
    })
}

fn step(
    data: &Dataset,
    loss: &RobustLoss,
    weights: ArrayView1<f64>,
    state: &State,
    phi_prev: f64,
    cfg: &SolverConfig,
) -> Result<(State, f64, usize, f64)> {
    let mut phi = cfg.phi0.max(phi_prev / cfg.gamma_u);
    let mut backtracks = 0;
    loop {
        let inv = 1.0 / phi;
        let cand = Zip::from(&state.beta)
            .and(&state.grad)
            .and(weights)
            .map_collect(|&b, &g, &w| soft(b - g * inv, w * inv));
        let r = data.residuals(cand.view())?;
        let new_loss = loss_from_residuals(loss, r.view());
        let model = quadratic_model(
            state.loss,
            state.grad.view(),
            cand.view(),
            state.beta.view(),
            phi,
        );
        let slack = MAJORIZATION_RTOL * (1.0 + state.loss.abs());
        let mut grad = None;
        let accept = if !new_loss.is_finite() || model < new_loss - slack {
            false
        } else if model >= new_loss {
            true
        } else {
            // Within rounding of the loss values: fall back to the convexity bound
            // L(b) - L(a) - <g(a), b - a> <= <g(b) - g(a), b - a>.
            let g = gradient_from_residuals(data, loss, r.view());
            let (curv, sq) = Zip::from(&g)
                .and(&state.grad)
                .and(&cand)
                .and(&state.beta)
                .fold((0.0, 0.0), |(c, q), &gn, &go, &bn, &bo| {
                    let dlt = bn - bo;
                    (c + (gn - go) * dlt, q + dlt * dlt)
                });
            grad = Some(g);
            curv <= 0.5 * phi * sq
        };
        if accept {
            let grad = grad.unwrap_or_else(|| gradient_from_residuals(data, loss, r.view()));
            let gap = model - new_loss;
            let next = State {
                beta: cand,
                loss: new_loss,
                grad,
            };
            return Ok((next, phi, backtracks, gap));
        }
        backtracks += 1;
        if backtracks > MAX_BACKTRACKS {
            return Err(IrwError::BacktrackLimit {
                limit: MAX_BACKTRACKS,
                phi,
            });
        }
        phi *= cfg.gamma_u;
    }
}

/// Solve the weighted-l1 program to `omega <= cfg.eps`, starting from
/// `beta_init`. Hitting `max_inner_iters` is reported through
/// [`SolveOutput::converged`], not as an error.
pub fn solve_weighted_l1(
    data: &Dataset,
    loss: &RobustLoss,
    weights: ArrayView1<f64>,
    beta_init: ArrayView1<f64>,
    cfg: &SolverConfig,
) -> Result<SolveOutput> {
    cfg.validate()?;
    loss.validate()?;
    check_dim("weight length", data.d(), weights.len())?;
    if weights.iter().any(|&w| !w.is_finite() || w < 0.0) {
        return Err(IrwError::InvalidParameter(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let mut state = State::at(data, loss, beta_init.to_owned())?;
    let mut omega = suboptimality_from_gradient(state.grad.view(), weights, state.beta.view());
    let mut objective = state.loss + weighted_l1(weights, state.beta.view());
    let mut trace = InnerTrace {
        initial_objective: objective,
        initial_omega: omega,
        iterations: Vec::new(),
    };
    let mut phi = cfg.phi0;
    while omega > cfg.eps && trace.len() < cfg.max_inner_iters {
        let (next, accepted_phi, backtracks, gap) = step(data, loss, weights, &state, phi, cfg)?;
        let step_norm = Zip::from(&next.beta)
            .and(&state.beta)
            .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
            .sqrt();
        state = next;
        phi = accepted_phi;
        omega = suboptimality_from_gradient(state.grad.view(), weights, state.beta.view());
        objective = state.loss + weighted_l1(weights, state.beta.view());
        trace.iterations.push(IterationRecord {
            objective,
            omega,
            phi,
            backtracks,
            majorization_gap: gap,
            step_norm,
        });
    }
    Ok(SolveOutput {
        converged: omega <= cfg.eps,
        beta: state.beta,
        omega,
        phi,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    #[test]
    fn soft_threshold_examples() {
        let out =
            soft_threshold(array![2.0, -0.3, 0.6].view(), array![0.5, 0.5, 0.5].view()).unwrap();
        assert_abs_diff_eq!(out[0], 1.5);
        assert_eq!(out[1], 0.0);
        assert_abs_diff_eq!(out[2], 0.1, epsilon = 1e-15);
        let v = array![1.0, -2.0, 0.0];
        assert_eq!(
            soft_threshold(v.view(), Array1::zeros(3).view()).unwrap(),
            v
        );
        assert_eq!(
            soft_threshold(Array1::zeros(3).view(), array![0.1, 0.0, 3.0].view()).unwrap(),
            Array1::<f64>::zeros(3)
        );
        assert!(soft_threshold(v.view(), array![1.0].view()).is_err());
    }

    #[test]
    fn majorizer_examples() {
        let data = Dataset::new(array![1.0], array![[1.0]]).unwrap();
        let h = RobustLoss::huber(5.0).unwrap();
        let anchor = array![0.0];
        // L(0) = 0.5, grad = -1
        assert_abs_diff_eq!(
            majorizer_value(&data, &h, anchor.view(), 1.0, anchor.view()).unwrap(),
            0.5
        );
        assert_abs_diff_eq!(
            majorizer_value(&data, &h, array![1.0].view(), 1.0, anchor.view()).unwrap(),
            0.0
        );
        let f1 = majorizer_value(&data, &h, array![0.6].view(), 1.0, anchor.view()).unwrap();
        let f2 = majorizer_value(&data, &h, array![0.6].view(), 2.0, anchor.view()).unwrap();
        assert_abs_diff_eq!(f2 - f1, 0.5 * 0.36, epsilon = 1e-15);
    }

    #[test]
    fn iteration_examples() {
        let data = Dataset::new(array![1.0], array![[1.0]]).unwrap();
        let h = RobustLoss::huber(1.0).unwrap();
        let cfg = SolverConfig {
            phi0: 1.0,
            ..SolverConfig::default()
        };
        let s =
            lamm_iteration(&data, &h, array![0.2].view(), array![0.0].view(), 1.0, &cfg).unwrap();
        assert_abs_diff_eq!(s.beta[0], 0.8, epsilon = 1e-15);
        assert_eq!(s.backtracks, 0);
        assert_eq!(s.phi, 1.0);

        let s =
            lamm_iteration(&data, &h, array![0.0].view(), array![1.0].view(), 8.0, &cfg).unwrap();
        assert_eq!(s.beta[0], 1.0);
        assert_eq!(s.phi, 4.0);
    }

    #[test]
    fn iteration_backtracks_from_small_phi() {
        let data = Dataset::new(array![1.0, 2.0], array![[1.0], [2.0]]).unwrap();
        let h = RobustLoss::huber(10.0).unwrap();
        let cfg = SolverConfig::default();
        let s = lamm_iteration(
            &data,
            &h,
            array![0.0].view(),
            array![0.0].view(),
            cfg.phi0,
            &cfg,
        )
        .unwrap();
        // curvature of the quadratic is mean(x^2) = 2.5, so phi must reach at least 1.25
        assert!(s.backtracks > 0);
        assert!(s.phi >= 1.25);
    }

    #[test]
    fn huge_weights_return_origin_immediately() {
        let data = Dataset::new(
            array![1.0, -2.0, 3.0],
            array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
        )
        .unwrap();
        let h = RobustLoss::huber(1.0).unwrap();
        let out = solve_weighted_l1(
            &data,
            &h,
            array![10.0, 10.0].view(),
            array![0.0, 0.0].view(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(out.beta, array![0.0, 0.0]);
        assert!(out.trace.is_empty());
        assert!(out.converged);
    }

    #[test]
    fn flags_non_convergence() {
        let data = Dataset::new(
            array![1.0, -2.0, 3.0],
            array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
        )
        .unwrap();
        let h = RobustLoss::huber(1.0).unwrap();
        let cfg = SolverConfig {
            eps: 1e-12,
            max_inner_iters: 3,
            ..SolverConfig::default()
        };
        let out = solve_weighted_l1(
            &data,
            &h,
            array![0.01, 0.01].view(),
            array![0.0, 0.0].view(),
            &cfg,
        )
        .unwrap();
        assert!(!out.converged);
        assert_eq!(out.trace.len(), 3);
    }

    #[test]
    fn rejects_invalid_configuration() {
        let data = Dataset::new(array![1.0], array![[1.0]]).unwrap();
        let h = RobustLoss::huber(1.0).unwrap();
        let bad = SolverConfig {
            gamma_u: 1.0,
            ..SolverConfig::default()
        };
        assert!(
            solve_weighted_l1(&data, &h, array![0.1].view(), array![0.0].view(), &bad).is_err()
        );
        let cfg = SolverConfig::default();
        assert!(
            solve_weighted_l1(&data, &h, array![-0.1].view(), array![0.0].view(), &cfg).is_err()
        );
        assert!(
            solve_weighted_l1(&data, &h, array![0.1, 0.1].view(), array![0.0].view(), &cfg)
                .is_err()
        );
    }

    #[test]
    fn unpenalized_one_dimensional_mean() {
        let data = Dataset::new(array![1.0, 2.0, 3.0], Array2::ones((3, 1))).unwrap();
        let h = RobustLoss::huber(100.0).unwrap();
        let cfg = SolverConfig {
            eps: 1e-10,
            ..SolverConfig::default()
        };
        let out =
            solve_weighted_l1(&data, &h, array![0.0].view(), array![0.0].view(), &cfg).unwrap();
        assert!(out.converged);
        assert_abs_diff_eq!(out.beta[0], 2.0, epsilon = 1e-9);
    }
}
