//! Shared fixtures for the criterion benchmarks.

use irw_core::simulation::{generate, table_beta_star, ErrorDist, NoiseModel, ScenarioSpec};
use irw_core::{Dataset, Penalty, PenaltyKind, PipelineConfig, RobustLoss};

/// Sparse Gaussian-design instance with centered lognormal noise.
pub fn instance(n: usize, d: usize, seed: u64) -> Dataset {
    let spec = ScenarioSpec {
        n,
        d,
        beta_star: table_beta_star(d),
        model: NoiseModel::Homoscedastic,
        error: ErrorDist::lognormal_centered(0.0, 1.2),
        seed,
    };
    generate(&spec).expect("valid scenario")
}

/// `lambda = sqrt(log(d) / n)` scaled, the usual theoretical order.
pub fn default_lambda(n: usize, d: usize) -> f64 {
    1.5 * ((d as f64).ln() / n as f64).sqrt()
}

pub fn pipeline(kind: PenaltyKind, n: usize, d: usize, stages: usize) -> PipelineConfig {
    PipelineConfig::new(
        RobustLoss::huber(2.0).expect("positive tau"),
        Penalty::new(kind, default_lambda(n, d)).expect("positive lambda"),
        stages,
        n,
    )
}
