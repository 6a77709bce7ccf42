use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::dist::ErrorDist;
use crate::data::Dataset;
use crate::error::{check_dim, IrwError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// `y = x^T beta* + eps`
    Homoscedastic,
    /// `y = x^T beta* + c^{-1} (x^T beta*)^2 eps` with `c = sqrt(3) ||beta*||_2^2`
    Heteroscedastic,
}

impl NoiseModel {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseModel::Homoscedastic => "homoscedastic",
            NoiseModel::Heteroscedastic => "heteroscedastic",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub d: usize,
    pub beta_star: Vec<f64>,
    pub model: NoiseModel,
    pub error: ErrorDist,
    pub seed: u64,
}

/// `(4, 3, 2, -2, -2, 2, 0, ..., 0)`.
pub fn table_beta_star(d: usize) -> Vec<f64> {
    let head = [4.0, 3.0, 2.0, -2.0, -2.0, 2.0];
    (0..d)
        .map(|j| head.get(j).copied().unwrap_or(0.0))
        .collect()
}

/// `s` leading coefficients equal to `value`, the rest zero.
pub fn constant_beta_star(d: usize, s: usize, value: f64) -> Vec<f64> {
    (0..d).map(|j| if j < s { value } else { 0.0 }).collect()
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(IrwError::InvalidParameter(
                "scenario needs n, d >= 1".into(),
            ));
        }
        check_dim("beta_star length", self.d, self.beta_star.len())?;
        if self.beta_star.iter().any(|b| !b.is_finite()) {
            return Err(IrwError::InvalidParameter(
                "beta_star must be finite".into(),
            ));
        }
        if self.model == NoiseModel::Heteroscedastic && self.beta_star.iter().all(|&b| b == 0.0) {
            return Err(IrwError::InvalidParameter(
                "heteroscedastic model needs a nonzero beta_star".into(),
            ));
        }
        self.error.validate()
    }

    pub fn support(&self) -> Vec<usize> {
        self.beta_star
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn beta_star(&self) -> Array1<f64> {
        Array1::from(self.beta_star.clone())
    }

    /// `sqrt(3) ||beta*||_2^2`.
    pub fn heteroscedastic_scale(&self) -> f64 {
        3.0_f64.sqrt() * self.beta_star.iter().map(|b| b * b).sum::<f64>()
    }

    /// Same scenario with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        ScenarioSpec {
            seed,
            ..self.clone()
        }
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.model.label(), self.error.label())
    }
}

/// `n x d` matrix of i.i.d. standard normal entries, filled row by row.
pub fn sample_design<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Array2<f64> {
    let v: Vec<f64> = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    Array2::from_shape_vec((n, d), v).expect("shape matches length")
}

pub fn sample_errors<R: Rng + ?Sized>(
    dist: &ErrorDist,
    n: usize,
    rng: &mut R,
) -> Result<Array1<f64>> {
    dist.sample(n, rng)
}

/// Draw a dataset; the design is drawn before the errors from one stream
/// seeded by `spec.seed`.
pub fn generate(spec: &ScenarioSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let x = sample_design(spec.n, spec.d, &mut rng);
    let eps = sample_errors(&spec.error, spec.n, &mut rng)?;
    let signal = x.dot(&spec.beta_star());
    let y = match spec.model {
        NoiseModel::Homoscedastic => &signal + &eps,
        NoiseModel::Heteroscedastic => {
            let c = spec.heteroscedastic_scale();
            &signal + &(signal.mapv(|v| v * v / c) * &eps)
        }
    };
    Dataset::new(y, x)
}
