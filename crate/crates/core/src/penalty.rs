//! Folded-concave penalties `p_lambda(t) = lambda^2 * p(t / lambda)`.
//!
//! Only the derivative drives the reweighting; the penalty value is kept for
//! checking the penalty axioms.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{IrwError, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_A: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PenaltyKind {
    L1,
    Scad { a: f64 },
    Mcp { a: f64 },
    CappedL1,
}

impl PenaltyKind {
    pub fn scad() -> Self {
        PenaltyKind::Scad { a: DEFAULT_SCAD_A }
    }

    pub fn mcp() -> Self {
        PenaltyKind::Mcp { a: DEFAULT_MCP_A }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PenaltyKind::L1 => "l1",
            PenaltyKind::Scad { .. } => "scad",
            PenaltyKind::Mcp { .. } => "mcp",
            PenaltyKind::CappedL1 => "capped-l1",
        }
    }

    /// Parse a penalty name, using `a` as the shape parameter when given.
    pub fn parse_with_shape(name: &str, a: Option<f64>) -> Result<Self> {
        let kind = match name {
            "l1" => PenaltyKind::L1,
            "scad" => PenaltyKind::Scad {
                a: a.unwrap_or(DEFAULT_SCAD_A),
            },
            "mcp" => PenaltyKind::Mcp {
                a: a.unwrap_or(DEFAULT_MCP_A),
            },
            "capped-l1" => PenaltyKind::CappedL1,
            other => {
                return Err(IrwError::InvalidParameter(format!(
                    "unknown penalty '{other}' (expected l1, scad, mcp or capped-l1)"
                )))
            }
        };
        kind.validate()?;
        Ok(kind)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PenaltyKind::Scad { a } if !(a > 2.0 && a.is_finite()) => Err(
                IrwError::InvalidParameter(format!("SCAD requires a > 2, got {a}")),
            ),
            PenaltyKind::Mcp { a } if !(a > 1.0 && a.is_finite()) => Err(
                IrwError::InvalidParameter(format!("MCP requires a > 1, got {a}")),
            ),
            _ => Ok(()),
        }
    }

    /// Unit-level derivative `p'(|t|)`.
    pub fn unit_deriv(&self, t: f64) -> f64 {
        let t = t.abs();
        match *self {
            PenaltyKind::L1 => 1.0,
            PenaltyKind::Scad { a } => (1.0 - (t - 1.0) / (a - 1.0)).clamp(0.0, 1.0),
            PenaltyKind::Mcp { a } => (1.0 - t / a).max(0.0),
            PenaltyKind::CappedL1 => {
                if t <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Unit-level penalty value `p(t)`.
    pub fn unit_value(&self, t: f64) -> f64 {
        let t = t.abs();
        match *self {
            PenaltyKind::L1 => t,
            PenaltyKind::Scad { a } => {
                if t <= 1.0 {
                    t
                } else if t <= a {
                    t - (t - 1.0).powi(2) / (2.0 * (a - 1.0))
                } else {
                    (a + 1.0) / 2.0
                }
            }
            PenaltyKind::Mcp { a } => {
                if t <= a {
                    t - t * t / (2.0 * a)
                } else {
                    a / 2.0
                }
            }
            PenaltyKind::CappedL1 => t.min(1.0),
        }
    }

    /// Threshold `gamma_1` beyond which the unit derivative vanishes, if any.
    pub fn vanishing_point(&self) -> Option<f64> {
        match *self {
            PenaltyKind::L1 => None,
            PenaltyKind::Scad { a } | PenaltyKind::Mcp { a } => Some(a),
            PenaltyKind::CappedL1 => Some(1.0),
        }
    }
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PenaltyKind::Scad { a } | PenaltyKind::Mcp { a } => write!(f, "{}(a={a})", self.name()),
            _ => f.write_str(self.name()),
        }
    }
}

impl FromStr for PenaltyKind {
    type Err = IrwError;

    fn from_str(s: &str) -> Result<Self> {
        PenaltyKind::parse_with_shape(s, None)
    }
}

/// A penalty family at regularization level `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub kind: PenaltyKind,
    pub lambda: f64,
}

impl Penalty {
    pub fn new(kind: PenaltyKind, lambda: f64) -> Result<Self> {
        let pen = Penalty { kind, lambda };
        pen.validate()?;
        Ok(pen)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        if self.lambda.is_finite() && self.lambda > 0.0 {
            Ok(())
        } else {
            Err(IrwError::InvalidParameter(format!(
                "lambda must be positive and finite, got {}",
                self.lambda
            )))
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Penalty { lambda, ..self }
    }

    /// `p'_lambda(|t|)`, a value in `[0, lambda]`.
    #[inline]
    pub fn weight(&self, t: f64) -> f64 {
        self.lambda * self.kind.unit_deriv(t / self.lambda)
    }

    /// `p_lambda(t)`.
    pub fn value(&self, t: f64) -> f64 {
        self.lambda * self.lambda * self.kind.unit_value(t / self.lambda)
    }

    /// Componentwise reweighting vector `p'_lambda(|beta_j|)`.
    pub fn weight_vector(&self, beta: ArrayView1<f64>) -> Array1<f64> {
        beta.mapv(|b| self.weight(b))
    }
}
