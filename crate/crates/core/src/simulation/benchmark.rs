use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{generate, ScenarioSpec};
use crate::data::Dataset;
use crate::error::{IrwError, Result};
use crate::loss::{LossKind, RobustLoss};
use crate::metrics::{auc, relative_errors, tp_fp, DEFAULT_ZERO_TOL};
use crate::penalty::{Penalty, PenaltyKind, DEFAULT_MCP_A, DEFAULT_SCAD_A};
use crate::pipeline::{default_stage_count, fit_path, lambda_max, PipelineConfig};
use crate::tuning::{
    cv_fit, default_lambda_ratio, lasso_pilot, log_spaced, quadratic_loss, tau_center, tau_grid,
    CvScore, CvSettings, TunedFit, DEFAULT_CV_FOLDS, DEFAULT_N_LAMBDA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Lasso,
    Scad,
    HuberScad,
    Mcp,
    HuberMcp,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lasso,
        Method::Scad,
        Method::HuberScad,
        Method::Mcp,
        Method::HuberMcp,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Lasso => "Lasso",
            Method::Scad => "SCAD",
            Method::HuberScad => "Huber-SCAD",
            Method::Mcp => "MC+",
            Method::HuberMcp => "Huber-MC+",
        }
    }

    pub fn is_robust(self) -> bool {
        matches!(self, Method::HuberScad | Method::HuberMcp)
    }

    fn penalty_kind(self, scad_a: f64, mcp_a: f64) -> PenaltyKind {
        match self {
            Method::Lasso => PenaltyKind::L1,
            Method::Scad | Method::HuberScad => PenaltyKind::Scad { a: scad_a },
            Method::Mcp | Method::HuberMcp => PenaltyKind::Mcp { a: mcp_a },
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = IrwError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lasso" => Ok(Method::Lasso),
            "scad" => Ok(Method::Scad),
            "huber-scad" => Ok(Method::HuberScad),
            "mcp" | "mc+" => Ok(Method::Mcp),
            "huber-mcp" | "huber-mc+" => Ok(Method::HuberMcp),
            _ => Err(IrwError::InvalidParameter(format!("unknown method '{s}'"))),
        }
    }
}

/// Settings shared by the benchmark and ROC drivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchSettings {
    pub methods: Vec<Method>,
    pub replications: usize,
    /// Loss family of the robust methods.
    pub robust_loss: LossKind,
    /// Stage count; `None` uses [`default_stage_count`] with the true sparsity.
    pub stages: Option<usize>,
    pub n_lambda: usize,
    /// `None` uses [`default_lambda_ratio`].
    pub lambda_ratio: Option<f64>,
    pub cv_folds: usize,
    pub cv_score: CvScore,
    pub scad_a: f64,
    pub mcp_a: f64,
    pub zero_tol: f64,
}

impl Default for BenchSettings {
    fn default() -> Self {
        BenchSettings {
            methods: Method::ALL.to_vec(),
            replications: 50,
            robust_loss: LossKind::Huber,
            stages: None,
            n_lambda: DEFAULT_N_LAMBDA,
            lambda_ratio: None,
            cv_folds: DEFAULT_CV_FOLDS,
            cv_score: CvScore::default(),
            scad_a: DEFAULT_SCAD_A,
            mcp_a: DEFAULT_MCP_A,
            zero_tol: DEFAULT_ZERO_TOL,
        }
    }
}

impl BenchSettings {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(IrwError::InvalidParameter("no methods selected".into()));
        }
        if self.replications == 0 {
            return Err(IrwError::InvalidParameter(
                "replications must be at least 1".into(),
            ));
        }
        if self.stages == Some(0) {
            return Err(IrwError::InvalidParameter(
                "stages must be at least 1".into(),
            ));
        }
        if self.n_lambda < 2 {
            return Err(IrwError::InvalidParameter(
                "n_lambda must be at least 2".into(),
            ));
        }
        if let Some(r) = self.lambda_ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(IrwError::InvalidParameter(format!(
                    "lambda ratio must lie in (0, 1), got {r}"
                )));
            }
        }
        if self.cv_folds < 2 {
            return Err(IrwError::InvalidParameter(
                "cv_folds must be at least 2".into(),
            ));
        }
        if self.zero_tol.is_nan() || self.zero_tol < 0.0 {
            return Err(IrwError::InvalidParameter(
                "zero_tol must be nonnegative".into(),
            ));
        }
        PenaltyKind::Scad { a: self.scad_a }.validate()?;
        PenaltyKind::Mcp { a: self.mcp_a }.validate()
    }

    fn stages_for(&self, spec: &ScenarioSpec) -> usize {
        self.stages
            .unwrap_or_else(|| default_stage_count(spec.support().len(), spec.d))
    }

    fn ratio_for(&self, n: usize, d: usize) -> f64 {
        self.lambda_ratio
            .unwrap_or_else(|| default_lambda_ratio(n, d))
    }

    fn cv_settings(&self, seed: u64) -> CvSettings {
        CvSettings {
            n_lambda: self.n_lambda,
            lambda_ratio: self.lambda_ratio,
            folds: self.cv_folds,
            score: self.cv_score,
            seed,
        }
    }
}

/// Seed of replication `rep`.
pub fn replication_seed(seed: u64, rep: usize) -> u64 {
    seed ^ rep as u64
}

/// Tuned fit of a non-Lasso method. Robust methods search the `tau` grid
/// around `sigma_hat`; quadratic ones use the least-squares stand-in.
fn fit_method(
    data: &Dataset,
    method: Method,
    stages: usize,
    sigma_hat: f64,
    settings: &BenchSettings,
    cv: &CvSettings,
) -> Result<TunedFit> {
    let kind = method.penalty_kind(settings.scad_a, settings.mcp_a);
    let (loss, taus) = if method.is_robust() {
        let taus = tau_grid(sigma_hat, data.n(), data.d())?.to_vec();
        (RobustLoss::new(settings.robust_loss, taus[0])?, taus)
    } else {
        let q = quadratic_loss(data)?;
        (q, vec![q.tau])
    };
    let template = PipelineConfig::new(loss, Penalty::new(kind, 1.0)?, stages, data.n());
    cv_fit(data, &template, taus, cv, !method.is_robust())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub tp: usize,
    pub fp: usize,
    /// `None` when the Lasso reference error vanishes.
    pub re: Option<(f64, f64)>,
    pub lambda: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationFailure {
    pub scenario: usize,
    pub replication: usize,
    pub method: Option<Method>,
    pub message: String,
}

/// Fit every method on one dataset. The CV-tuned quadratic Lasso is always
/// fitted: it is the reference for the relative errors and its residuals
/// give the MAD scale of the robust `tau` grid.
fn run_replication(
    spec: &ScenarioSpec,
    settings: &BenchSettings,
    scenario: usize,
    rep: usize,
) -> (Vec<MethodOutcome>, Vec<ReplicationFailure>) {
    let seed = replication_seed(spec.seed, rep);
    let fail = |method: Option<Method>, e: IrwError| ReplicationFailure {
        scenario,
        replication: rep,
        method,
        message: e.to_string(),
    };
    let data = match generate(&spec.with_seed(seed)) {
        Ok(d) => d,
        Err(e) => return (Vec::new(), vec![fail(None, e)]),
    };
    let stages = settings.stages_for(spec);
    let support = spec.support();
    let beta_star = spec.beta_star();

    let cv = settings.cv_settings(seed);
    let (lasso, sigma_hat) = match lasso_pilot(&data, &cv) {
        Ok(p) => p,
        Err(e) => return (Vec::new(), vec![fail(Some(Method::Lasso), e)]),
    };

    let mut outcomes = Vec::new();
    let mut failures = Vec::new();
    for &method in &settings.methods {
        let fit = if method == Method::Lasso {
            Ok(lasso.clone())
        } else {
            fit_method(&data, method, stages, sigma_hat, settings, &cv)
        };
        match fit {
            Ok(fit) => {
                let sel = tp_fp(fit.beta().view(), &support, settings.zero_tol);
                let re = if method == Method::Lasso {
                    Some((1.0, 1.0))
                } else {
                    relative_errors(fit.beta().view(), lasso.beta().view(), beta_star.view())
                };
                outcomes.push(MethodOutcome {
                    method,
                    tp: sel.tp,
                    fp: sel.fp,
                    re,
                    lambda: fit.cv.lambda,
                    tau: fit.cv.tau,
                });
            }
            Err(e) => failures.push(fail(Some(method), e)),
        }
    }
    (outcomes, failures)
}

/// Aggregated metrics of one method on one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub model: String,
    pub error_dist: String,
    pub method: Method,
    pub tp_mean: f64,
    pub tp_sd: f64,
    pub fp_mean: f64,
    pub fp_sd: f64,
    pub re1_mean: f64,
    /// `None` for the Lasso, whose relative errors are one by definition.
    pub re1_sd: Option<f64>,
    pub re2_mean: f64,
    pub re2_sd: Option<f64>,
    /// Replications that contributed to the row.
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
    pub failures: Vec<ReplicationFailure>,
}

/// Mean and sample standard deviation (zero for fewer than two values).
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, var.sqrt())
}

fn aggregate(spec: &ScenarioSpec, method: Method, outcomes: &[&MethodOutcome]) -> BenchmarkRow {
    let col = |f: &dyn Fn(&MethodOutcome) -> Option<f64>| -> Vec<f64> {
        outcomes.iter().filter_map(|o| f(o)).collect()
    };
    let (tp_mean, tp_sd) = mean_sd(&col(&|o| Some(o.tp as f64)));
    let (fp_mean, fp_sd) = mean_sd(&col(&|o| Some(o.fp as f64)));
    let (re1_mean, re1_sd, re2_mean, re2_sd) = if method == Method::Lasso {
        (1.0, None, 1.0, None)
    } else {
        let (m1, s1) = mean_sd(&col(&|o| o.re.map(|r| r.0)));
        let (m2, s2) = mean_sd(&col(&|o| o.re.map(|r| r.1)));
        (m1, Some(s1), m2, Some(s2))
    };
    BenchmarkRow {
        model: spec.model.label().to_string(),
        error_dist: spec.error.label().to_string(),
        method,
        tp_mean,
        tp_sd,
        fp_mean,
        fp_sd,
        re1_mean,
        re1_sd,
        re2_mean,
        re2_sd,
        replications: outcomes.len(),
    }
}

/// Replicated simulation of every scenario and method. Replications run in
/// parallel; failures are collected rather than aborting the run.
pub fn run_benchmark(
    scenarios: &[ScenarioSpec],
    settings: &BenchSettings,
) -> Result<BenchmarkReport> {
    settings.validate()?;
    for spec in scenarios {
        spec.validate()?;
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (si, spec) in scenarios.iter().enumerate() {
        let reps: Vec<(Vec<MethodOutcome>, Vec<ReplicationFailure>)> = (0..settings.replications)
            .into_par_iter()
            .map(|rep| run_replication(spec, settings, si, rep))
            .collect();
        for &method in &settings.methods {
            let outs: Vec<&MethodOutcome> = reps
                .iter()
                .flat_map(|(o, _)| o.iter())
                .filter(|o| o.method == method)
                .collect();
            rows.push(aggregate(spec, method, &outs));
        }
        failures.extend(reps.into_iter().flat_map(|(_, f)| f));
    }
    Ok(BenchmarkReport { rows, failures })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Mean `lambda` at this path position over replications.
    pub lambda: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub method: Method,
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocReport {
    pub curves: Vec<RocCurve>,
    pub failures: Vec<ReplicationFailure>,
}

/// Per-replication `(lambda, fpr, tpr)` along each method's path.
type RocRep = Vec<(Method, Result<Vec<(f64, f64, f64)>>)>;

fn roc_replication(spec: &ScenarioSpec, settings: &BenchSettings, rep: usize) -> Result<RocRep> {
    let seed = replication_seed(spec.seed, rep);
    let data = generate(&spec.with_seed(seed))?;
    let (n, d) = (data.n(), data.d());
    let stages = settings.stages_for(spec);
    let support = spec.support();
    let s = support.len() as f64;
    let ratio = settings.ratio_for(n, d);
    let quad = quadratic_loss(&data)?;
    let (_, sigma_hat) = lasso_pilot(&data, &settings.cv_settings(seed))?;
    let robust = RobustLoss::new(settings.robust_loss, tau_center(sigma_hat, n, d))?;

    Ok(settings
        .methods
        .iter()
        .map(|&method| {
            let run = || -> Result<Vec<(f64, f64, f64)>> {
                let loss = if method.is_robust() { robust } else { quad };
                let kind = method.penalty_kind(settings.scad_a, settings.mcp_a);
                let st = if method == Method::Lasso { 1 } else { stages };
                let lambdas = log_spaced(lambda_max(&data, &loss)?, settings.n_lambda, ratio);
                let template = PipelineConfig::new(loss, Penalty::new(kind, 1.0)?, st, n);
                let fits = fit_path(&data, &template, &lambdas)?;
                Ok(lambdas
                    .iter()
                    .zip(&fits)
                    .map(|(&l, fit)| {
                        let sel = tp_fp(fit.beta.view(), &support, settings.zero_tol);
                        (l, sel.fp as f64 / (d as f64 - s), sel.tp as f64 / s)
                    })
                    .collect())
            };
            (method, run())
        })
        .collect())
}

/// ROC curves over the `lambda` path. Robust methods use the fixed
/// `tau = sigma_hat sqrt(n / ln(n d))` with `sigma_hat` the MAD of the
/// residuals of a cross-validated quadratic Lasso pilot.
pub fn run_roc(spec: &ScenarioSpec, settings: &BenchSettings) -> Result<RocReport> {
    settings.validate()?;
    spec.validate()?;
    let s = spec.support().len();
    if s == 0 || s >= spec.d {
        return Err(IrwError::InvalidParameter(format!(
            "ROC needs 0 < |support| < d, got |support| = {s}, d = {}",
            spec.d
        )));
    }
    let reps: Vec<Result<RocRep>> = (0..settings.replications)
        .into_par_iter()
        .map(|rep| roc_replication(spec, settings, rep))
        .collect();

    let mut failures = Vec::new();
    let mut per_method: Vec<Vec<Vec<(f64, f64, f64)>>> = vec![Vec::new(); settings.methods.len()];
    for (rep, res) in reps.into_iter().enumerate() {
        match res {
            Ok(runs) => {
                for (k, (method, run)) in runs.into_iter().enumerate() {
                    match run {
                        Ok(points) => per_method[k].push(points),
                        Err(e) => failures.push(ReplicationFailure {
                            scenario: 0,
                            replication: rep,
                            method: Some(method),
                            message: e.to_string(),
                        }),
                    }
                }
            }
            Err(e) => failures.push(ReplicationFailure {
                scenario: 0,
                replication: rep,
                method: None,
                message: e.to_string(),
            }),
        }
    }

    let curves = settings
        .methods
        .iter()
        .zip(per_method)
        .map(|(&method, runs)| {
            let r = runs.len() as f64;
            let points: Vec<RocPoint> = (0..settings.n_lambda)
                .map(|i| {
                    let sum = runs.iter().fold((0.0, 0.0, 0.0), |acc, run| {
                        (acc.0 + run[i].0, acc.1 + run[i].1, acc.2 + run[i].2)
                    });
                    RocPoint {
                        lambda: sum.0 / r,
                        fpr: sum.1 / r,
                        tpr: sum.2 / r,
                    }
                })
                .collect();
            let auc = if runs.is_empty() {
                f64::NAN
            } else {
                auc(&points.iter().map(|p| (p.fpr, p.tpr)).collect::<Vec<_>>())
            };
            RocCurve {
                method,
                points,
                auc,
                replications: runs.len(),
            }
        })
        .collect();
    Ok(RocReport { curves, failures })
}
