//! Multi-stage iteratively reweighted l1 fitting: a contraction stage
//! (plain weighted-l1 with constant weights `lambda`) followed by tightening
//! stages whose weights are `p'_lambda(|beta|)` of the previous solution.

use ndarray::{Array1, ArrayView1, Zip};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{IrwError, Result};
use crate::loss::RobustLoss;
use crate::objective::empirical_gradient;
use crate::penalty::Penalty;
use crate::solver::{solve_weighted_l1, InnerTrace, SolverConfig, DEFAULT_GAMMA_U, DEFAULT_PHI0};

/// Weight vectors closer than this in sup-norm are treated as a fixed point.
pub const WEIGHT_FIXED_POINT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITERS_CONTRACTION: usize = 10_000;
pub const DEFAULT_MAX_ITERS_TIGHTENING: usize = 500;

/// LAMM settings shared by all stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LammSettings {
    pub phi0: f64,
    pub gamma_u: f64,
    pub max_iters_contraction: usize,
    pub max_iters_tightening: usize,
}

impl Default for LammSettings {
    fn default() -> Self {
        LammSettings {
            phi0: DEFAULT_PHI0,
            gamma_u: DEFAULT_GAMMA_U,
            max_iters_contraction: DEFAULT_MAX_ITERS_CONTRACTION,
            max_iters_tightening: DEFAULT_MAX_ITERS_TIGHTENING,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub loss: RobustLoss,
    pub penalty: Penalty,
    pub stages: usize,
    pub eps_contraction: f64,
    pub eps_tightening: f64,
    pub solver: LammSettings,
}

/// Default contraction tolerance, proportional to `lambda`.
pub fn default_eps_contraction(lambda: f64) -> f64 {
    1e-4 * lambda
}

/// Default tightening tolerance, `0.1 * min(eps_c, 1/sqrt(n))`.
pub fn default_eps_tightening(eps_contraction: f64, n: usize) -> f64 {
    0.1 * eps_contraction.min(1.0 / (n as f64).sqrt())
}

impl PipelineConfig {
    /// Configuration with tolerances scaled to `penalty.lambda` and `n`.
    pub fn new(loss: RobustLoss, penalty: Penalty, stages: usize, n: usize) -> Self {
        let eps_contraction = default_eps_contraction(penalty.lambda);
        PipelineConfig {
            loss,
            penalty,
            stages,
            eps_contraction,
            eps_tightening: default_eps_tightening(eps_contraction, n),
            solver: LammSettings::default(),
        }
    }

    /// Same settings at a different `lambda`, with tolerances rescaled.
    pub fn at_lambda(&self, lambda: f64, n: usize) -> Self {
        let mut cfg =
            PipelineConfig::new(self.loss, self.penalty.with_lambda(lambda), self.stages, n);
        cfg.solver = self.solver;
        cfg
    }

    pub fn with_loss(mut self, loss: RobustLoss) -> Self {
        self.loss = loss;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.loss.validate()?;
        self.penalty.validate()?;
        if self.stages == 0 {
            return Err(IrwError::InvalidParameter(
                "stages must be at least 1".into(),
            ));
        }
        if !(self.eps_contraction > 0.0 && self.eps_tightening > 0.0) {
            return Err(IrwError::InvalidParameter(
                "tolerances must be positive".into(),
            ));
        }
        if self.eps_tightening > self.eps_contraction {
            return Err(IrwError::InvalidParameter(format!(
                "eps_tightening ({}) must not exceed eps_contraction ({})",
                self.eps_tightening, self.eps_contraction
            )));
        }
        self.stage_solver(1).validate()?;
        self.stage_solver(2).validate()
    }

    /// Solver settings for stage `stage` (1-based).
    pub fn stage_solver(&self, stage: usize) -> SolverConfig {
        let (eps, max_inner_iters) = if stage <= 1 {
            (self.eps_contraction, self.solver.max_iters_contraction)
        } else {
            (self.eps_tightening, self.solver.max_iters_tightening)
        };
        SolverConfig {
            phi0: self.solver.phi0,
            gamma_u: self.solver.gamma_u,
            eps,
            max_inner_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: usize,
    pub weights: Array1<f64>,
    pub beta: Array1<f64>,
    pub omega: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: InnerTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Array1<f64>,
    pub stages: Vec<StageRecord>,
    pub active_set: Vec<usize>,
    /// Every stage reached its tolerance.
    pub converged: bool,
    /// Stopped before the configured stage count because the weights stopped changing.
    pub early_stop: bool,
}

impl FitResult {
    pub fn total_iterations(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).sum()
    }
}

pub fn support(beta: ArrayView1<f64>) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

fn stage_weights(data: &Dataset, penalty: &Penalty, prev: ArrayView1<f64>) -> Array1<f64> {
    let mut w = penalty.weight_vector(prev);
    if data.has_intercept() {
        w[0] = 0.0;
    }
    w
}

/// Run the contraction/tightening sequence from the zero initial estimate.
pub fn irw_fit(data: &Dataset, cfg: &PipelineConfig) -> Result<FitResult> {
    irw_fit_warm(data, cfg, None)
}

/// As [`irw_fit`], but the contraction-stage solver starts from `warm`
/// instead of the origin. The contraction program itself is unchanged
/// (its weights are always `lambda`), so only the iteration count differs.
pub fn irw_fit_warm(
    data: &Dataset,
    cfg: &PipelineConfig,
    warm: Option<ArrayView1<f64>>,
) -> Result<FitResult> {
    cfg.validate()?;
    let d = data.d();
    let zero = Array1::zeros(d);
    let mut prev = zero.clone();
    let mut stages: Vec<StageRecord> = Vec::with_capacity(cfg.stages);
    let mut early_stop = false;
    for stage in 1..=cfg.stages {
        let weights = stage_weights(data, &cfg.penalty, prev.view());
        if let Some(last) = stages.last() {
            let diff = Zip::from(&weights)
                .and(&last.weights)
                .fold(0.0_f64, |m, &a, &b| m.max((a - b).abs()));
            if diff <= WEIGHT_FIXED_POINT_TOL {
                early_stop = true;
                break;
            }
        }
        let init = match (stage, warm) {
            (1, Some(w)) => w.to_owned(),
            (1, None) => zero.clone(),
            _ => prev.clone(),
        };
        let out = solve_weighted_l1(
            data,
            &cfg.loss,
            weights.view(),
            init.view(),
            &cfg.stage_solver(stage),
        )?;
        prev = out.beta.clone();
        stages.push(StageRecord {
            stage,
            weights,
            beta: out.beta,
            omega: out.omega,
            iterations: out.trace.len(),
            converged: out.converged,
            trace: out.trace,
        });
    }
    Ok(FitResult {
        active_set: support(prev.view()),
        converged: stages.iter().all(|s| s.converged),
        beta: prev,
        stages,
        early_stop,
    })
}

/// Fit along a decreasing sequence of `lambda` values, warm-starting each
/// contraction stage from the previous contraction solution.
pub fn fit_path(
    data: &Dataset,
    template: &PipelineConfig,
    lambdas: &[f64],
) -> Result<Vec<FitResult>> {
    let mut out = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Array1<f64>> = None;
    for &lambda in lambdas {
        let cfg = template.at_lambda(lambda, data.n());
        let fit = irw_fit_warm(data, &cfg, warm.as_ref().map(|w| w.view()))?;
        warm = fit.stages.first().map(|s| s.beta.clone());
        out.push(fit);
    }
    Ok(out)
}

/// Heuristic number of stages growing like `log s + log log d`:
/// `ceil(log2 max(s, 2)) + ceil(log2 max(ln d, 2)) + 1`, clamped to `[3, 15]`.
pub fn default_stage_count(s_hint: usize, d: usize) -> usize {
    let s = s_hint.max(2) as f64;
    let lnd = (d.max(1) as f64).ln().max(2.0);
    let t = s.log2().ceil() + lnd.log2().ceil() + 1.0;
    (t as usize).clamp(3, 15)
}

pub const ORACLE_EPS: f64 = 1e-8;
const ORACLE_MAX_ITERS: usize = 200_000;

/// Unpenalized robust fit restricted to `support`; all other coefficients are zero.
pub fn oracle_fit(data: &Dataset, loss: &RobustLoss, support: &[usize]) -> Result<Array1<f64>> {
    if support.is_empty() {
        return Err(IrwError::IllPosed("oracle support is empty".into()));
    }
    if support.len() >= data.n() {
        return Err(IrwError::IllPosed(format!(
            "oracle support size {} must be below n = {}",
            support.len(),
            data.n()
        )));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= data.d()) {
        return Err(IrwError::InvalidParameter(format!(
            "support index {j} out of range"
        )));
    }
    let sub = data.select_columns(support);
    let cfg = SolverConfig {
        eps: ORACLE_EPS,
        max_inner_iters: ORACLE_MAX_ITERS,
        ..SolverConfig::default()
    };
    let zeros = Array1::zeros(support.len());
    let out = solve_weighted_l1(&sub, loss, zeros.view(), zeros.view(), &cfg)?;
    if !out.converged {
        return Err(IrwError::IllPosed(format!(
            "oracle fit did not converge (omega = {:e})",
            out.omega
        )));
    }
    let mut beta = Array1::zeros(data.d());
    for (k, &j) in support.iter().enumerate() {
        beta[j] = out.beta[k];
    }
    Ok(beta)
}

/// `||grad L(0)||_inf` over penalized coordinates: the smallest `lambda` at
/// which the origin solves the contraction program.
pub fn lambda_max(data: &Dataset, loss: &RobustLoss) -> Result<f64> {
    let g = empirical_gradient(data, loss, Array1::zeros(data.d()).view())?;
    let skip = usize::from(data.has_intercept());
    Ok(g.iter().skip(skip).fold(0.0_f64, |m, v| m.max(v.abs())))
}
