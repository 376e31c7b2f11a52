//! From-scratch feed-forward engine and the hierarchical bottleneck
//! architectures built from it, with joint training and evaluation.

mod eval;
mod io;
mod model;
mod net;
mod train;

pub mod check;

pub use eval::{fit_first_level_all, linear_baseline_r2, r_squared, test_r2, FirstLevelFit};
pub use io::{model_from_json, model_to_json};
pub use model::{
    combination_range, IannModel, LatentStats, ModelGrads, ModelStructure, ModelWorkspace,
    TrainMeta,
};
pub use net::{Activation, DenseLayer, Mlp, MlpGrads, MlpSpec, NetWorkspace};
pub use train::{dataset_from_design, train, Dataset, TrainOptions};

use crate::blackbox::BlackBoxError;
use crate::numerics::NumericsError;
use crate::sampling::SamplingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IannError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    BlackBox(#[from] BlackBoxError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[cfg(test)]
mod tests;

#[cfg(test)]
mod bench_probe;
