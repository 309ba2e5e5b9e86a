//! Synthetic corpus and the tuning experiments run against it.

mod corpus;
mod experiments;
mod fixtures;
mod report;

pub use corpus::{identity_id, CameraProfile, Corpus, CorpusSpec, FacebookProfile, SampleRef};
pub use experiments::{
    default_enrollment, run_named, run_threshold_sweep, run_training_cost, run_transfer_matrix,
    run_window_sweep, CameraTraining, CostConfig, ExperimentConfig, ThresholdConfig, ThresholdRow,
    ThresholdSweep, TrainingCost, TransferCell, TransferMatrix, WindowConfig, WindowRow,
    WindowSweep, EXPERIMENT_NAMES, TEST_COLUMNS, TRAIN_ROWS,
};
pub use fixtures::synthetic_store;
pub use report::ExperimentReport;

use thiserror::Error;

use crate::facekit::FacekitError;
use crate::recognizer::RecognizerError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid corpus spec: {0}")]
    InvalidSpec(String),
    #[error("sample out of range: {0}")]
    OutOfRange(String),
    #[error("corpus sample {0:?} failed the skin gate")]
    Rejected(SampleRef),
    #[error("invalid experiment configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error(transparent)]
    Facekit(#[from] FacekitError),
    #[error(transparent)]
    Recognizer(#[from] RecognizerError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}
