//! Variational quantum classifier.
//!
//! The model output is `f(x) = Σ_s λ_s P(s | U(θ, x))`, linear in the
//! observable weights `λ`. Training alternates between proposing circuit
//! phases `θ` with a Gaussian-process surrogate and fitting `λ` for the
//! proposed circuit ("seesaw" optimization).

mod gp;
mod model;
mod nelder_mead;
mod ridge;
mod seesaw;
mod spectrum;

use thiserror::Error;

use crate::fock::FockError;
use crate::interferometer::CircuitError;
use crate::simulator::SimulationError;

pub use gp::{candidate_set, gp_propose, GpOptions, GpSurrogate};
pub use model::{
    loss, loss_from_probabilities, model_eval, predict, probability_matrix, Evaluation, ModelRecord, VqcModel,
    DEFAULT_INPUT_MODES, DEFAULT_MODES,
};
pub use nelder_mead::{nelder_mead, NelderMeadOptions, NelderMeadResult};
pub use ridge::{ridge_lambda, ridge_solve};
pub use seesaw::{
    seesaw_train, Backend, LambdaOptimizer, RepeatResult, ShotBudget, Summary, TrainConfig, TrainedResult,
};
pub use spectrum::{spectrum_probe, FourierCoefficient};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmlError {
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("optimizer diverged: {0}")]
    Diverged(String),
    #[error("invalid history: {0}")]
    InvalidHistory(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error(transparent)]
    Fock(#[from] FockError),
}
