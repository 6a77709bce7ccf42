//! Command configurations. Each resolves from an optional JSON file plus
//! command-line overrides and is echoed to the output directory.

use std::fs;
use std::path::Path;

use irw_core::simulation::{BenchSettings, ScenarioSpec};
use irw_core::tuning::{CvSettings, DEFAULT_CV_FOLDS, DEFAULT_N_LAMBDA};
use irw_core::{CvScore, LossKind, PenaltyKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_S_HINT: usize = 10;

/// Settings of the `fit`, `cv` and `path` commands.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub loss: LossKind,
    /// `None`: centre of the MAD-based grid from a cross-validated Lasso pilot.
    pub tau: Option<f64>,
    pub penalty: PenaltyKind,
    pub lambda: Option<f64>,
    /// `None`: heuristic count from `s_hint` and the dimension.
    pub stages: Option<usize>,
    pub s_hint: usize,
    pub intercept: bool,
    pub n_lambda: usize,
    pub lambda_ratio: Option<f64>,
    pub cv_folds: usize,
    pub cv_score: CvScore,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            loss: LossKind::Huber,
            tau: None,
            penalty: PenaltyKind::scad(),
            lambda: None,
            stages: None,
            s_hint: DEFAULT_S_HINT,
            intercept: false,
            n_lambda: DEFAULT_N_LAMBDA,
            lambda_ratio: None,
            cv_folds: DEFAULT_CV_FOLDS,
            cv_score: CvScore::default(),
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.penalty.validate()?;
        let positive = |name: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => {
                Err(CliError::input(format!("{name} must be positive, got {v}")))
            }
            _ => Ok(()),
        };
        positive("tau", self.tau)?;
        positive("lambda", self.lambda)?;
        if self.stages == Some(0) {
            return Err(CliError::input("stages must be at least 1"));
        }
        if self.s_hint == 0 {
            return Err(CliError::input("s_hint must be at least 1"));
        }
        if self.n_lambda < 2 {
            return Err(CliError::input("n_lambda must be at least 2"));
        }
        if let Some(r) = self.lambda_ratio {
            if !(r > 0.0 && r < 1.0) {
                return Err(CliError::input(format!(
                    "lambda_ratio must lie in (0, 1), got {r}"
                )));
            }
        }
        if self.cv_folds < 2 {
            return Err(CliError::input("cv_folds must be at least 2"));
        }
        Ok(())
    }

    pub fn cv_settings(&self) -> CvSettings {
        CvSettings {
            n_lambda: self.n_lambda,
            lambda_ratio: self.lambda_ratio,
            folds: self.cv_folds,
            score: self.cv_score,
            seed: self.seed,
        }
    }
}

/// Settings of the `bench` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub scenarios: Vec<ScenarioSpec>,
    #[serde(default)]
    pub settings: BenchSettings,
}

/// Settings of the `roc` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RocConfig {
    pub scenario: ScenarioSpec,
    #[serde(default)]
    pub settings: BenchSettings,
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}
