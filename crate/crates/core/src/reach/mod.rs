//! Data-driven reachability: a least-squares affine model fitted to noisy
//! input–state data, widened by the fit residuals, a Lipschitz term and the
//! process noise, and propagated step by step as zonotopes.

mod dataset;
mod model;
mod step;

use thiserror::Error;

use crate::setalg::SetError;

pub use dataset::{Trajectory, TrajectoryDataset};
pub use model::{
    build_noise_matrix_zonotope, estimate_lipschitz_and_radius, fit_model, lipschitz_zonotope, residual_zonotope,
    LeastSquaresModel, PINV_CUTOFF,
};
pub use step::{reach_sequence, reach_step, reach_step_cz, Estimate, Linearization, ReachConfig, Reacher};

#[derive(Debug, Error)]
pub enum ReachError {
    #[error("dataset has no transitions")]
    EmptyDataset,
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("trajectory CSV: {0}")]
    Csv(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("all data points coincide; Lipschitz constant cannot be estimated")]
    AllDuplicates,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Set(#[from] SetError),
}

impl From<csv::Error> for ReachError {
    fn from(e: csv::Error) -> Self {
        ReachError::Csv(e.to_string())
    }
}
