//! Desk-scale trainable classifier: synthetic chroma data, a small
//! convolutional/dense network with exact gradients, and a training loop
//! with plateau scheduling and early stopping.

use thiserror::Error;

pub mod data;
pub mod net;
pub mod train;

pub use data::{synth_dataset, Dataset, FeatureFrame};
pub use net::{conv2d, Activation, ConvKernelSet, InputNorm, Network, NoiseConfig};
pub use train::{
    accuracy, train, write_history_csv, EpochStats, ModelCheckpoint, OptimizerKind, TrainConfig,
    TrainOutcome,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LearnerError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("shape error: {0}")]
    Shape(String),
}
