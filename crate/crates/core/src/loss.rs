//! Robust loss families of the form `l_tau(x) = tau^2 * l(x / tau)`.
//!
//! Every family is convex with `l(0) = 0`, `l'(0) = 0` and `l''(0) = 1`, has a
//! bounded first derivative and is locally quadratic near the origin. The
//! scaled forms are always obtained from the base form, so each family has a
//! single closed-form definition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{IrwError, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Robust loss family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    /// `x^2/2` for `|x| <= 1`, `|x| - 1/2` otherwise.
    Huber,
    /// `sqrt(1 + x^2) - 1`.
    #[serde(rename = "pseudo-huber-1")]
    PseudoHuber1,
    /// `log cosh(x)`.
    #[serde(rename = "pseudo-huber-2")]
    PseudoHuber2,
    /// `x^2/2 - |x|^3/6` for `|x| <= 1`, `|x|/2 - 1/6` otherwise.
    #[serde(rename = "smoothed-huber-1")]
    SmoothedHuber1,
    /// `x^2/2 - x^4/24` for `|x| <= sqrt(2)`, `(2 sqrt(2)/3)|x| - 1/2` otherwise.
    #[serde(rename = "smoothed-huber-2")]
    SmoothedHuber2,
}

/// Constants of the globally-Lipschitz, locally-quadratic loss class.
///
/// `|l'(x)| <= c1` everywhere, `l''(x) >= c2` on `|x| <= c3`, and
/// `|l'(x) - x| <= c4 * x^2` everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::Huber,
        LossKind::PseudoHuber1,
        LossKind::PseudoHuber2,
        LossKind::SmoothedHuber1,
        LossKind::SmoothedHuber2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Huber => "huber",
            LossKind::PseudoHuber1 => "pseudo-huber-1",
            LossKind::PseudoHuber2 => "pseudo-huber-2",
            LossKind::SmoothedHuber1 => "smoothed-huber-1",
            LossKind::SmoothedHuber2 => "smoothed-huber-2",
        }
    }

    /// Base loss `l(x)`.
    pub fn value(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            LossKind::Huber => {
                if a <= 1.0 {
                    0.5 * x * x
                } else {
                    a - 0.5
                }
            }
            // sqrt(1+x^2) - 1 rewritten to avoid cancellation near zero
            LossKind::PseudoHuber1 => x * x / ((1.0 + x * x).sqrt() + 1.0),
            // log cosh x = |x| + log(1 + e^{-2|x|}) - log 2
            LossKind::PseudoHuber2 => a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2,
            LossKind::SmoothedHuber1 => {
                if a <= 1.0 {
                    0.5 * x * x - a * a * a / 6.0
                } else {
                    0.5 * a - 1.0 / 6.0
                }
            }
            LossKind::SmoothedHuber2 => {
                if a <= SQRT_2 {
                    0.5 * x * x - x.powi(4) / 24.0
                } else {
                    (2.0 * SQRT_2 / 3.0) * a - 0.5
                }
            }
        }
    }

    /// First derivative `l'(x)`.
    pub fn deriv(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            LossKind::Huber => {
                if a <= 1.0 {
                    x
                } else {
                    x.signum()
                }
            }
            LossKind::PseudoHuber1 => x / (1.0 + x * x).sqrt(),
            LossKind::PseudoHuber2 => x.tanh(),
            LossKind::SmoothedHuber1 => {
                if a <= 1.0 {
                    x - x * a / 2.0
                } else {
                    0.5 * x.signum()
                }
            }
            LossKind::SmoothedHuber2 => {
                if a <= SQRT_2 {
                    x - x * x * x / 6.0
                } else {
                    (2.0 * SQRT_2 / 3.0) * x.signum()
                }
            }
        }
    }

    /// Second derivative `l''(x)`. The Huber kink `|x| = 1` belongs to the
    /// quadratic region.
    pub fn second(self, x: f64) -> f64 {
        let a = x.abs();
        match self {
            LossKind::Huber => {
                if a <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LossKind::PseudoHuber1 => (1.0 + x * x).powf(-1.5),
            LossKind::PseudoHuber2 => {
                let t = x.tanh();
                1.0 - t * t
            }
            LossKind::SmoothedHuber1 => (1.0 - a).max(0.0),
            LossKind::SmoothedHuber2 => {
                if a <= SQRT_2 {
                    1.0 - x * x / 2.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Lower bound of `l''` on `|x| <= c`.
    pub fn curvature_floor(self, c: f64) -> f64 {
        let c = c.abs();
        match self {
            LossKind::Huber => {
                if c <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            LossKind::PseudoHuber1 => (1.0 + c * c).powf(-1.5),
            LossKind::PseudoHuber2 => 4.0 / (c.exp() + (-c).exp()).powi(2),
            LossKind::SmoothedHuber1 => (1.0 - c).max(0.0),
            LossKind::SmoothedHuber2 => (1.0 - c * c / 2.0).max(0.0),
        }
    }

    pub fn constants(self) -> LossConstants {
        let (c1, c3, c4) = match self {
            LossKind::Huber => (1.0, 1.0, 1.0),
            LossKind::PseudoHuber1 => (1.0, 0.5, 0.45),
            LossKind::PseudoHuber2 => (1.0, 0.5, 0.265),
            LossKind::SmoothedHuber1 => (0.5, 0.5, 0.5),
            LossKind::SmoothedHuber2 => (2.0 * SQRT_2 / 3.0, 0.5, 1.0 / SQRT_2),
        };
        LossConstants {
            c1,
            c2: self.curvature_floor(c3),
            c3,
            c4,
        }
    }

    /// Points where `l''` is discontinuous.
    pub fn kinks(self) -> &'static [f64] {
        match self {
            LossKind::Huber => &[-1.0, 1.0],
            LossKind::SmoothedHuber2 => &[-SQRT_2, SQRT_2],
            _ => &[],
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = IrwError;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                IrwError::InvalidParameter(format!(
                    "unknown loss '{s}' (expected one of huber, pseudo-huber-1, pseudo-huber-2, smoothed-huber-1, smoothed-huber-2)"
                ))
            })
    }
}

/// A loss family together with its robustification parameter `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustLoss {
    pub kind: LossKind,
    pub tau: f64,
}

impl RobustLoss {
    pub fn new(kind: LossKind, tau: f64) -> Result<Self> {
        let loss = RobustLoss { kind, tau };
        loss.validate()?;
        Ok(loss)
    }

    pub fn huber(tau: f64) -> Result<Self> {
        Self::new(LossKind::Huber, tau)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau.is_finite() && self.tau > 0.0 {
            Ok(())
        } else {
            Err(IrwError::InvalidParameter(format!(
                "tau must be positive and finite, got {}",
                self.tau
            )))
        }
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.tau * self.tau * self.kind.value(x / self.tau)
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        self.tau * self.kind.deriv(x / self.tau)
    }

    #[inline]
    pub fn second(&self, x: f64) -> f64 {
        self.kind.second(x / self.tau)
    }

    /// `sup |l_tau'| = c1 * tau`.
    pub fn score_bound(&self) -> f64 {
        self.kind.constants().c1 * self.tau
    }
}
