//! Data-driven choice of `lambda` and `tau`: MAD residual scale, the `tau`
//! candidate grid, a glmnet-style `lambda` path and k-fold cross-validation.

use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{IrwError, Result};
use crate::loss::RobustLoss;
use crate::penalty::{Penalty, PenaltyKind};
use crate::pipeline::{fit_path, irw_fit, lambda_max, FitResult, PipelineConfig};

/// `Phi^{-1}(3/4)`.
pub const NORMAL_Q75: f64 = 0.674_489_750_196_081_7;
pub const DEFAULT_CV_FOLDS: usize = 3;
pub const DEFAULT_N_LAMBDA: usize = 50;
/// Multiplier on the response scale giving the quadratic-regime `tau`.
pub const QUADRATIC_TAU_FACTOR: f64 = 1e6;

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// `median(|r - median(r)|) / Phi^{-1}(3/4)`.
pub fn mad_sigma(residuals: ArrayView1<f64>) -> Result<f64> {
    if residuals.is_empty() {
        return Err(IrwError::InvalidData("MAD of an empty vector".into()));
    }
    let mut r = residuals.to_vec();
    let center = median(&mut r);
    let mut dev: Vec<f64> = r.iter().map(|v| (v - center).abs()).collect();
    Ok(median(&mut dev) / NORMAL_Q75)
}

/// `sigma * sqrt(n / ln(n d))`, the center of the `tau` grid.
pub fn tau_center(sigma_hat: f64, n: usize, d: usize) -> f64 {
    sigma_hat * (n as f64 / ((n as f64) * (d as f64)).ln()).sqrt()
}

/// `{2^j sigma sqrt(n / ln(n d)) : j = -2..=2}`.
pub fn tau_grid(sigma_hat: f64, n: usize, d: usize) -> Result<[f64; 5]> {
    if !(sigma_hat > 0.0 && sigma_hat.is_finite()) {
        return Err(IrwError::InvalidParameter(format!(
            "sigma must be positive, got {sigma_hat}"
        )));
    }
    if n < 2 || (n as f64) * (d as f64) <= std::f64::consts::E {
        return Err(IrwError::InvalidParameter(format!(
            "tau grid needs n >= 2 and n*d > e (n={n}, d={d})"
        )));
    }
    let c = tau_center(sigma_hat, n, d);
    Ok([0.25 * c, 0.5 * c, c, 2.0 * c, 4.0 * c])
}

/// Log-spaced decreasing sequence from `lambda_max` down to `ratio * lambda_max`.
pub fn log_spaced(lambda_max: f64, n_lambda: usize, ratio: f64) -> Vec<f64> {
    let step = ratio.ln() / (n_lambda - 1) as f64;
    (0..n_lambda)
        .map(|k| {
            if k == 0 {
                lambda_max
            } else {
                lambda_max * (step * k as f64).exp()
            }
        })
        .collect()
}

fn check_path_args(n_lambda: usize, ratio: f64) -> Result<()> {
    if n_lambda < 2 {
        return Err(IrwError::InvalidParameter(format!(
            "n_lambda must be at least 2, got {n_lambda}"
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(IrwError::InvalidParameter(format!(
            "lambda ratio must lie in (0, 1), got {ratio}"
        )));
    }
    Ok(())
}

/// `lambda` path starting at `||grad L(0)||_inf`.
pub fn lambda_path(
    data: &Dataset,
    loss: &RobustLoss,
    n_lambda: usize,
    ratio: f64,
) -> Result<Vec<f64>> {
    check_path_args(n_lambda, ratio)?;
    let lmax = lambda_max(data, loss)?;
    if lmax.is_nan() || lmax <= 0.0 {
        return Err(IrwError::InvalidData(
            "gradient at the origin vanishes (zero design or zero response)".into(),
        ));
    }
    Ok(log_spaced(lmax, n_lambda, ratio))
}

/// glmnet's default minimum ratio: 1e-4 when `n > d`, 1e-2 otherwise.
pub fn default_lambda_ratio(n: usize, d: usize) -> f64 {
    if n > d {
        1e-4
    } else {
        1e-2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub lambdas: Vec<f64>,
    pub taus: Vec<f64>,
    pub cv_folds: usize,
}

impl TuningGrid {
    pub fn new(lambdas: Vec<f64>, taus: Vec<f64>, cv_folds: usize) -> Result<Self> {
        let grid = TuningGrid {
            lambdas,
            taus,
            cv_folds,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid whose shared `lambda` path starts at the largest `lambda_max`
    /// over the candidate `tau` values.
    pub fn for_data(
        data: &Dataset,
        loss_template: &RobustLoss,
        taus: Vec<f64>,
        n_lambda: usize,
        ratio: f64,
        cv_folds: usize,
    ) -> Result<Self> {
        check_path_args(n_lambda, ratio)?;
        let mut lmax = 0.0_f64;
        for &tau in &taus {
            let loss = RobustLoss::new(loss_template.kind, tau)?;
            lmax = lmax.max(lambda_max(data, &loss)?);
        }
        if lmax.is_nan() || lmax <= 0.0 {
            return Err(IrwError::InvalidData(
                "gradient at the origin vanishes (zero design or zero response)".into(),
            ));
        }
        TuningGrid::new(log_spaced(lmax, n_lambda, ratio), taus, cv_folds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.taus.is_empty() {
            return Err(IrwError::InvalidParameter(
                "tuning grid must be non-empty".into(),
            ));
        }
        if self.cv_folds < 2 {
            return Err(IrwError::InvalidParameter(format!(
                "cv_folds must be at least 2, got {}",
                self.cv_folds
            )));
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite()))
            || self.lambdas.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(IrwError::InvalidParameter(
                "lambdas must be positive and strictly decreasing".into(),
            ));
        }
        if self.taus.iter().any(|&t| !(t > 0.0 && t.is_finite()))
            || self.taus.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(IrwError::InvalidParameter(
                "taus must be positive and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Held-out scoring rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CvScore {
    /// Mean robust loss at the candidate `tau`.
    #[default]
    RobustLoss,
    /// Mean absolute held-out residual.
    AbsoluteError,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambda: f64,
    pub tau: f64,
    pub lambda_index: usize,
    pub tau_index: usize,
    pub score: CvScore,
    /// `mean_loss[t][l]` for `taus[t]`, `lambdas[l]`.
    pub mean_loss: Vec<Vec<f64>>,
    /// `fold_loss[t][f][l]`.
    pub fold_loss: Vec<Vec<Vec<f64>>>,
    /// Number of grid fits that hit an iteration cap.
    pub nonconverged_fits: usize,
}

/// Deterministic fold labels: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut labels = vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        labels[i] = pos % folds;
    }
    labels
}

fn heldout_score(
    test: &Dataset,
    loss: &RobustLoss,
    beta: ArrayView1<f64>,
    score: CvScore,
) -> Result<f64> {
    let r = test.residuals(beta)?;
    let n = r.len() as f64;
    Ok(match score {
        CvScore::RobustLoss => r.iter().map(|&v| loss.value(v)).sum::<f64>() / n,
        CvScore::AbsoluteError => r.iter().map(|v| v.abs()).sum::<f64>() / n,
    })
}

pub fn cross_validate(
    data: &Dataset,
    template: &PipelineConfig,
    grid: &TuningGrid,
    seed: u64,
) -> Result<CvResult> {
    cross_validate_with(data, template, grid, seed, CvScore::default())
}

/// Joint `(lambda, tau)` cross-validation of the full multi-stage fit.
///
/// The argmin breaks ties toward larger `lambda`, then smaller `tau`.
pub fn cross_validate_with(
    data: &Dataset,
    template: &PipelineConfig,
    grid: &TuningGrid,
    seed: u64,
    score: CvScore,
) -> Result<CvResult> {
    grid.validate()?;
    let k = grid.cv_folds;
    if data.n() < k {
        return Err(IrwError::InvalidData(format!(
            "n = {} is smaller than the fold count {k}",
            data.n()
        )));
    }
    let labels = fold_assignment(data.n(), k, seed);
    let splits: Vec<(Dataset, Dataset)> = (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..data.n()).partition(|&i| labels[i] == f);
            (data.select_rows(&train), data.select_rows(&test))
        })
        .collect();
    if let Some(f) = splits.iter().position(|(_, test)| test.n() == 0) {
        return Err(IrwError::InvalidData(format!("fold {f} has no rows")));
    }

    let cells: Vec<(usize, usize)> = (0..grid.taus.len())
        .flat_map(|t| (0..k).map(move |f| (t, f)))
        .collect();
    let results: Vec<Result<(Vec<f64>, usize)>> = cells
        .par_iter()
        .map(|&(t, f)| {
            let loss = RobustLoss::new(template.loss.kind, grid.taus[t])?;
            let cfg = template.with_loss(loss);
            let (train, test) = &splits[f];
            let fits = fit_path(train, &cfg, &grid.lambdas)?;
            let nonconv = fits.iter().filter(|fit| !fit.converged).count();
            let scores = fits
                .iter()
                .map(|fit| heldout_score(test, &loss, fit.beta.view(), score))
                .collect::<Result<Vec<f64>>>()?;
            Ok((scores, nonconv))
        })
        .collect();

    let nl = grid.lambdas.len();
    let mut fold_loss = vec![vec![Vec::new(); k]; grid.taus.len()];
    let mut nonconverged_fits = 0;
    for (&(t, f), res) in cells.iter().zip(results) {
        let (scores, nc) = res?;
        fold_loss[t][f] = scores;
        nonconverged_fits += nc;
    }
    let mean_loss: Vec<Vec<f64>> = fold_loss
        .iter()
        .map(|per_fold| {
            (0..nl)
                .map(|l| per_fold.iter().map(|s| s[l]).sum::<f64>() / k as f64)
                .collect()
        })
        .collect();

    let mut best = (f64::INFINITY, 0, 0);
    for l in 0..nl {
        for (t, row) in mean_loss.iter().enumerate() {
            if row[l] < best.0 {
                best = (row[l], t, l);
            }
        }
    }
    let (_, tau_index, lambda_index) = best;
    Ok(CvResult {
        lambda: grid.lambdas[lambda_index],
        tau: grid.taus[tau_index],
        lambda_index,
        tau_index,
        score,
        mean_loss,
        fold_loss,
        nonconverged_fits,
    })
}

/// MAD scale of `v`, falling back to the standard deviation and then to 1
/// when the MAD vanishes.
pub fn robust_scale(v: ArrayView1<f64>) -> f64 {
    let mad = mad_sigma(v).unwrap_or(0.0);
    if mad > 0.0 && mad.is_finite() {
        return mad;
    }
    let sd = v.std(1.0);
    if sd > 0.0 && sd.is_finite() {
        sd
    } else {
        1.0
    }
}

/// Huber loss with `tau` far above any residual, i.e. least squares.
pub fn quadratic_loss(data: &Dataset) -> Result<RobustLoss> {
    RobustLoss::huber(QUADRATIC_TAU_FACTOR * robust_scale(data.y()))
}

/// Path and CV settings for [`cv_fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvSettings {
    pub n_lambda: usize,
    /// `None` uses [`default_lambda_ratio`].
    pub lambda_ratio: Option<f64>,
    pub folds: usize,
    pub score: CvScore,
    pub seed: u64,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings {
            n_lambda: DEFAULT_N_LAMBDA,
            lambda_ratio: None,
            folds: DEFAULT_CV_FOLDS,
            score: CvScore::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunedFit {
    pub fit: FitResult,
    pub cv: CvResult,
    pub grid: TuningGrid,
}

impl TunedFit {
    pub fn beta(&self) -> &Array1<f64> {
        &self.fit.beta
    }
}

/// Cross-validate `(lambda, tau)` over `taus` and the shared path, then refit
/// on all rows at the chosen pair. The loss family and penalty shape come
/// from `template`.
///
/// With `quadratic` set, `tau` stands in for least squares: whenever a
/// residual of the refit exceeds it, `tau` is inflated tenfold and the whole
/// procedure rerun.
pub fn cv_fit(
    data: &Dataset,
    template: &PipelineConfig,
    taus: Vec<f64>,
    settings: &CvSettings,
    quadratic: bool,
) -> Result<TunedFit> {
    let ratio = settings
        .lambda_ratio
        .unwrap_or_else(|| default_lambda_ratio(data.n(), data.d()));
    let mut taus = taus;
    loop {
        let grid = TuningGrid::for_data(
            data,
            &template.loss,
            taus.clone(),
            settings.n_lambda,
            ratio,
            settings.folds,
        )?;
        let cv = cross_validate_with(data, template, &grid, settings.seed, settings.score)?;
        let cfg = template
            .with_loss(RobustLoss::new(template.loss.kind, cv.tau)?)
            .at_lambda(cv.lambda, data.n());
        let fit = irw_fit(data, &cfg)?;
        if quadratic {
            let worst = data
                .residuals(fit.beta.view())?
                .iter()
                .fold(0.0_f64, |m, r| m.max(r.abs()));
            if worst > cv.tau {
                taus = vec![10.0 * cv.tau];
                continue;
            }
        }
        return Ok(TunedFit { fit, cv, grid });
    }
}

/// Cross-validated least-squares Lasso and the MAD scale of its residuals.
pub fn lasso_pilot(data: &Dataset, settings: &CvSettings) -> Result<(TunedFit, f64)> {
    let loss = quadratic_loss(data)?;
    let template = PipelineConfig::new(loss, Penalty::new(PenaltyKind::L1, 1.0)?, 1, data.n());
    let pilot = cv_fit(data, &template, vec![loss.tau], settings, true)?;
    let sigma = robust_scale(data.residuals(pilot.fit.beta.view())?.view());
    Ok((pilot, sigma))
}

/// `tau` grid centred on the MAD scale of the Lasso pilot residuals.
pub fn pilot_tau_grid(data: &Dataset, settings: &CvSettings) -> Result<(Vec<f64>, f64)> {
    let (_, sigma) = lasso_pilot(data, settings)?;
    Ok((tau_grid(sigma, data.n(), data.d())?.to_vec(), sigma))
}
