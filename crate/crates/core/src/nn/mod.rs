//! Small neural-network engine: Conv1D, MaxPool1D, Dense, LSTM, Dropout and
//! Softmax layers with exact backpropagation and Adam.

mod gradcheck;
mod io;
mod layers;
mod lstm;
mod model;
mod optim;
mod params;
mod spec;
mod train;

pub use gradcheck::{check_gradients, GradCheckReport, REL_ERROR_FLOOR};
pub use io::{decode_weights, encode_weights, ModelBundle, ModelHeader, MODEL_FORMAT_VERSION};
pub use layers::conv1d_forward;
pub use lstm::{lstm_step, LstmState, LstmWeights};
pub use model::{backward, cross_entropy, forward, one_hot, predict_class, predict_proba, ForwardPass, Mode, Targets, PROB_FLOOR};
pub use optim::{adam_update, AdamConfig, AdamState};
pub use params::{LayerParams, Params};
pub use spec::{Activation, LayerSpec, ModelFamily, ModelSpec, Padding};
pub use train::{accuracy, train, EpochStats, LossKind, TrainConfig, TrainHistory};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite activation after layer {layer}")]
    NonFiniteActivation { layer: usize },
    #[error("non-finite loss in epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("backward requires a forward pass run in training mode")]
    MissingCache,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("model bundle: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A trained classifier: spec plus immutable parameters, safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub spec: ModelSpec,
    pub params: Params,
}

impl Classifier {
    pub fn predict_proba(&self, rows: ndarray::ArrayView2<'_, f64>) -> Result<ndarray::Array2<f64>, NnError> {
        predict_proba(&self.spec, &self.params, rows)
    }

    pub fn predict(&self, rows: ndarray::ArrayView2<'_, f64>) -> Result<Vec<usize>, NnError> {
        Ok(predict_class(self.predict_proba(rows)?.view()))
    }
}
