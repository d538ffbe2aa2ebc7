//! Config-driven experiment runner for the homomorphic MDP solvers.
//!
//! An [`ExperimentConfig`] names a model, an algorithm and an abstraction
//! size; [`run_experiment`] writes one trace CSV per seeded repeat together
//! with a summary table and a manifest.

pub mod config;
pub mod error;
pub mod run;
pub mod summary;
pub mod timing;

pub use config::{load_suite, Algorithm, ExperimentConfig};
pub use error::{BenchError, Result};
pub use run::{abstract_size, run_experiment, run_suite, ExperimentResult, RepeatResult};
pub use summary::{summarize, SummaryRow, SummaryTable, SUMMARY_SUFFIX};
pub use timing::{time_policy_evaluation, EvaluationTiming};
