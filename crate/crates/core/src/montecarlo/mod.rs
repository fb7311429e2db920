//! Ensembles of independent paths, their summary statistics and ε-sweeps.
//!
//! Every path draws its noise from a seed that depends only on the master
//! seed, the ε index and the path index, and reductions run sequentially over
//! the collected per-path results. Estimates are therefore bit-identical for
//! any number of worker threads.

mod estimators;
mod exec;
mod stats;
mod sweep;

use thiserror::Error;

use crate::field::FieldError;
use crate::integrate::IntegrateError;
use crate::predict::PredictError;

pub use estimators::{
    confinement_samples, coupled_convergence_check, coupled_sup_errors, estimate_occupation,
    estimate_selection, occupation_samples, pre_hitting_sup_errors, sample_path,
    sliding_sup_errors, step_rule_for, terminal_samples, SelectionEstimate,
};
pub use exec::{path_seed, with_workers, worker_count};
pub use stats::{
    compensated_sum, ks_distance, mean_ci, median_ci, normal_quantile, sup_error, wilson_ci,
    EstimateWithCI,
};
pub use sweep::{eps_sweep, Statistic, SweepRow, SWEEP_CSV_HEADER};

pub const DEFAULT_LEVEL: f64 = 0.95;

#[derive(Debug, Error)]
pub enum McError {
    #[error("{no_exit} of {n} paths never left the slab (more than 10%)")]
    NoExitMajority { no_exit: usize, n: usize },
    #[error("paths end at different times ({a} and {b})")]
    IncompatibleHorizons { a: f64, b: f64 },
    #[error("the coupled comparison needs constant slopes c±")]
    RequiresConstantC,
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Predict(#[from] PredictError),
}
