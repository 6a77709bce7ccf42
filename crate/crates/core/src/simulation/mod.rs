//! Synthetic data generation and replicated benchmarks.

pub mod benchmark;
pub mod dist;
pub mod scenario;

pub use benchmark::{
    mean_sd, replication_seed, run_benchmark, run_roc, BenchSettings, BenchmarkReport,
    BenchmarkRow, Method, MethodOutcome, ReplicationFailure, RocCurve, RocPoint, RocReport,
};
pub use dist::{ErrorDist, ErrorFamily, SgtSampler};
pub use scenario::{
    constant_beta_star, generate, sample_design, sample_errors, table_beta_star, NoiseModel,
    ScenarioSpec,
};
