//! Per-person classifiers, temporal evidence accumulation, open-set
//! decisions and friendship-prior biasing.

mod bias;
mod classifier;
mod evidence;
mod training;

pub use bias::{apply_bias, co_occurrence_hypotheses, BiasLevels, CoOccurrence};
pub use classifier::{train, FaceScorer, NearestTemplate, PersonClassifier, Registry};
pub use evidence::{
    decide, decide_vector, population_std, Decision, DecisionPolicy, EvidenceWindow, ScoreVector,
    DEFAULT_THETA, DEFAULT_WINDOW,
};
pub use training::{
    export_training_sets, import_training_sets, manage_training_set, Source, TrainMode,
    TrainingAction, TrainingEntry, TrainingSet, OFFLINE_CAP, ONLINE_CAP,
};

use thiserror::Error;

use crate::socialstore::{PersonId, StoreError};

#[derive(Debug, Error)]
pub enum RecognizerError {
    #[error("training set for '{0}' is empty")]
    EmptyTrainingSet(PersonId),
    #[error("vector length {found} does not match expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("probe has no in-mask entries")]
    EmptyMask,
    #[error("no trained classifiers")]
    NoClassifiers,
    #[error("score vector persons do not match the evidence window")]
    KeyMismatch,
    #[error("score for '{0}' is not finite")]
    NonFinite(PersonId),
    #[error("evidence window is empty")]
    EmptyWindow,
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("invalid bias levels: {0}")]
    InvalidBias(String),
    #[error("unknown anchor '{0}'")]
    UnknownAnchor(PersonId),
    #[error("training-set index {index} out of range (size {len})")]
    BadIndex { index: usize, len: usize },
    #[error("training set for '{person}' is at its cap of {cap}")]
    CapExceeded { person: PersonId, cap: usize },
    #[error("training-set file: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Store(#[from] StoreError),
}
