//! Robust sparse linear regression.
//!
//! Estimates are computed by an iteratively reweighted l1 scheme: a
//! Huber-type loss is combined with a folded-concave penalty, each stage
//! solving a weighted-l1 program with the LAMM proximal-gradient solver.
//!
//! ```
//! use irw_core::{irw_fit, Dataset, Penalty, PenaltyKind, PipelineConfig, RobustLoss};
//! use ndarray::array;
//!
//! let x = array![[1.0, 0.2], [0.1, 1.0], [-1.0, 0.3], [0.4, -1.2], [0.9, 0.8]];
//! let y = array![2.1, 0.3, -1.9, 0.7, 1.9];
//! let data = Dataset::new(y, x).unwrap();
//! let cfg = PipelineConfig::new(
//!     RobustLoss::huber(1.0).unwrap(),
//!     Penalty::new(PenaltyKind::scad(), 0.1).unwrap(),
//!     3,
//!     data.n(),
//! );
//! let fit = irw_fit(&data, &cfg).unwrap();
//! assert!(fit.converged);
//! assert!(fit.beta[0] > 1.5);
//! ```

pub mod data;
pub mod error;
pub mod loss;
pub mod metrics;
pub mod objective;
pub mod penalty;
pub mod pipeline;
pub mod simulation;
pub mod solver;
pub mod tuning;

pub use data::Dataset;
pub use error::{IrwError, Result};
pub use loss::{LossConstants, LossKind, RobustLoss};
pub use metrics::{auc, relative_errors, tp_fp, Selection, DEFAULT_ZERO_TOL};
pub use objective::{empirical_gradient, empirical_loss, penalized_objective, suboptimality};
pub use penalty::{Penalty, PenaltyKind};
pub use pipeline::{
    default_stage_count, fit_path, irw_fit, irw_fit_warm, lambda_max, oracle_fit, FitResult,
    LammSettings, PipelineConfig, StageRecord,
};
pub use solver::{
    lamm_iteration, solve_weighted_l1, InnerTrace, IterationRecord, SolveOutput, SolverConfig,
};
pub use tuning::{
    cross_validate, cross_validate_with, cv_fit, lasso_pilot, tau_grid, CvResult, CvScore,
    CvSettings, TunedFit, TuningGrid,
};
