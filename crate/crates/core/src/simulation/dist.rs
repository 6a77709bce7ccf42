//! Error distributions for the simulation study.

use std::fmt;

use ndarray::Array1;
use rand::Rng;
use rand_distr::{Beta, Distribution, LogNormal, Normal, Pareto};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use crate::error::{IrwError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ErrorFamily {
    /// No noise.
    None,
    Normal {
        mu: f64,
        sigma: f64,
    },
    /// Skewed generalized t with mean `mu` and variance `sigma2`.
    Sgt {
        mu: f64,
        sigma2: f64,
        lambda: f64,
        p: f64,
        q: f64,
    },
    #[serde(rename = "lognormal")]
    LogNormal {
        mu_log: f64,
        sigma_log: f64,
    },
    Pareto {
        x_m: f64,
        alpha: f64,
    },
}

/// An error family, optionally shifted to mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorDist {
    #[serde(flatten)]
    pub family: ErrorFamily,
    #[serde(default)]
    pub centered: bool,
}

impl ErrorDist {
    pub fn none() -> Self {
        ErrorDist {
            family: ErrorFamily::None,
            centered: false,
        }
    }

    pub fn normal(mu: f64, sigma: f64) -> Self {
        ErrorDist {
            family: ErrorFamily::Normal { mu, sigma },
            centered: false,
        }
    }

    /// `sgt` with mean 0, variance 5, skewness 0.75, `p = 2`, `q = 2.5`.
    pub fn sgt_default() -> Self {
        ErrorDist {
            family: ErrorFamily::Sgt {
                mu: 0.0,
                sigma2: 5.0,
                lambda: 0.75,
                p: 2.0,
                q: 2.5,
            },
            centered: false,
        }
    }

    pub fn lognormal_centered(mu_log: f64, sigma_log: f64) -> Self {
        ErrorDist {
            family: ErrorFamily::LogNormal { mu_log, sigma_log },
            centered: true,
        }
    }

    pub fn pareto_centered(x_m: f64, alpha: f64) -> Self {
        ErrorDist {
            family: ErrorFamily::Pareto { x_m, alpha },
            centered: true,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.family {
            ErrorFamily::None => "none",
            ErrorFamily::Normal { .. } => "normal",
            ErrorFamily::Sgt { .. } => "sgt",
            ErrorFamily::LogNormal { .. } => "lognormal",
            ErrorFamily::Pareto { .. } => "pareto",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(IrwError::InvalidParameter(msg));
        match self.family {
            ErrorFamily::None => Ok(()),
            ErrorFamily::Normal { mu, sigma } => {
                if sigma > 0.0 && sigma.is_finite() && mu.is_finite() {
                    Ok(())
                } else {
                    bad(format!("normal requires sigma > 0, got {sigma}"))
                }
            }
            ErrorFamily::Sgt { .. } => SgtSampler::from_family(&self.family).map(|_| ()),
            ErrorFamily::LogNormal { mu_log, sigma_log } => {
                if sigma_log > 0.0 && sigma_log.is_finite() && mu_log.is_finite() {
                    Ok(())
                } else {
                    bad(format!("lognormal requires sigma > 0, got {sigma_log}"))
                }
            }
            ErrorFamily::Pareto { x_m, alpha } => {
                if x_m > 0.0 && alpha > 2.0 && x_m.is_finite() && alpha.is_finite() {
                    Ok(())
                } else {
                    bad(format!(
                        "pareto requires x_m > 0 and alpha > 2, got x_m={x_m}, alpha={alpha}"
                    ))
                }
            }
        }
    }

    /// Population mean of the uncentered family.
    pub fn population_mean(&self) -> f64 {
        match self.family {
            ErrorFamily::None => 0.0,
            ErrorFamily::Normal { mu, .. } => mu,
            ErrorFamily::Sgt { mu, .. } => mu,
            ErrorFamily::LogNormal { mu_log, sigma_log } => {
                (mu_log + sigma_log * sigma_log / 2.0).exp()
            }
            ErrorFamily::Pareto { x_m, alpha } => alpha * x_m / (alpha - 1.0),
        }
    }

    /// Population variance.
    pub fn population_variance(&self) -> f64 {
        match self.family {
            ErrorFamily::None => 0.0,
            ErrorFamily::Normal { sigma, .. } => sigma * sigma,
            ErrorFamily::Sgt { sigma2, .. } => sigma2,
            ErrorFamily::LogNormal { mu_log, sigma_log } => {
                let s2 = sigma_log * sigma_log;
                (s2.exp() - 1.0) * (2.0 * mu_log + s2).exp()
            }
            ErrorFamily::Pareto { x_m, alpha } => {
                x_m * x_m * alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0))
            }
        }
    }

    /// Draw `n` errors.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Array1<f64>> {
        self.validate()?;
        let shift = if self.centered {
            self.population_mean()
        } else {
            0.0
        };
        let raw: Vec<f64> = match self.family {
            ErrorFamily::None => vec![0.0; n],
            ErrorFamily::Normal { mu, sigma } => {
                let d = Normal::new(mu, sigma)
                    .map_err(|e| IrwError::InvalidParameter(e.to_string()))?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
            ErrorFamily::Sgt { .. } => {
                let s = SgtSampler::from_family(&self.family)?;
                (0..n).map(|_| s.sample(rng)).collect()
            }
            ErrorFamily::LogNormal { mu_log, sigma_log } => {
                let d = LogNormal::new(mu_log, sigma_log)
                    .map_err(|e| IrwError::InvalidParameter(e.to_string()))?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
            ErrorFamily::Pareto { x_m, alpha } => {
                let d = Pareto::new(x_m, alpha)
                    .map_err(|e| IrwError::InvalidParameter(e.to_string()))?;
                (0..n).map(|_| d.sample(rng)).collect()
            }
        };
        Ok(Array1::from(raw) - shift)
    }
}

impl fmt::Display for ErrorDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Skewed generalized t distribution (Theodossiou), parameterized by mean
/// `mu`, standard deviation `sigma`, skewness `lambda in (-1, 1)` and shapes
/// `p, q > 0` with `p q > 2`.
///
/// With `z = x - mu + m` the density is
///
/// ```text
/// f(x) = p / (2 s q^{1/p} B(1/p, q) (1 + |z|^p / (q s^p (1 + lambda sign z)^p))^{1/p + q})
/// ```
///
/// where `s` rescales `sigma` so the variance is `sigma^2` and `m` shifts
/// the mode so the mean is `mu`. Sampling uses the exact representation:
/// `z` falls on the positive side with probability `(1 + lambda)/2`, and
/// `|z| = (1 +- lambda) s (q W / (1 - W))^{1/p}` with `W ~ Beta(1/p, q)`.
#[derive(Debug, Clone)]
pub struct SgtSampler {
    mu: f64,
    lambda: f64,
    p: f64,
    q: f64,
    scale: f64,
    shift: f64,
    log_norm: f64,
    beta: Beta<f64>,
}

impl SgtSampler {
    pub fn new(mu: f64, sigma2: f64, lambda: f64, p: f64, q: f64) -> Result<Self> {
        let ok = mu.is_finite()
            && sigma2 > 0.0
            && sigma2.is_finite()
            && lambda > -1.0
            && lambda < 1.0
            && p > 0.0
            && q > 0.0
            && p * q > 2.0;
        if !ok {
            return Err(IrwError::InvalidParameter(format!(
                "sgt requires sigma2 > 0, |lambda| < 1, p, q > 0 and p*q > 2 (got sigma2={sigma2}, lambda={lambda}, p={p}, q={q})"
            )));
        }
        let b1 = ln_beta(1.0 / p, q);
        let b2 = ln_beta(2.0 / p, q - 1.0 / p);
        let b3 = ln_beta(3.0 / p, q - 2.0 / p);
        let r2 = (b2 - b1).exp();
        let r3 = (b3 - b1).exp();
        let qp = q.powf(1.0 / p);
        // variance of z / s is qp^2 * ((1 + 3 lambda^2) r3 - 4 lambda^2 r2^2)
        let unit_var =
            qp * qp * ((1.0 + 3.0 * lambda * lambda) * r3 - 4.0 * lambda * lambda * r2 * r2);
        let scale = (sigma2 / unit_var).sqrt();
        let shift = 2.0 * lambda * scale * qp * r2;
        let log_norm = p.ln() - (2.0 * scale * qp).ln() - b1;
        let beta = Beta::new(1.0 / p, q).map_err(|e| IrwError::InvalidParameter(e.to_string()))?;
        Ok(SgtSampler {
            mu,
            lambda,
            p,
            q,
            scale,
            shift,
            log_norm,
            beta,
        })
    }

    fn from_family(family: &ErrorFamily) -> Result<Self> {
        match *family {
            ErrorFamily::Sgt {
                mu,
                sigma2,
                lambda,
                p,
                q,
            } => SgtSampler::new(mu, sigma2, lambda, p, q),
            _ => Err(IrwError::InvalidParameter("not an sgt family".into())),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = x - self.mu + self.shift;
        let side = 1.0 + self.lambda * z.signum();
        let u = (z.abs() / (self.scale * side)).powf(self.p) / self.q;
        (self.log_norm - (1.0 / self.p + self.q) * u.ln_1p()).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w: f64 = self.beta.sample(rng);
        let ratio = w / (1.0 - w);
        let mag = self.scale * (self.q * ratio).powf(1.0 / self.p);
        let u: f64 = rng.random();
        let z = if u < (1.0 + self.lambda) / 2.0 {
            (1.0 + self.lambda) * mag
        } else {
            -(1.0 - self.lambda) * mag
        };
        z - self.shift + self.mu
    }
}
