use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: expected 3 fields, got {got} at line {line}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        got: usize,
    },

    #[error("{path}: invalid integer id at line {line}: {value:?}")]
    BadId {
        path: PathBuf,
        line: usize,
        value: String,
    },

    #[error("no training triples")]
    EmptyTrainingSet,

    #[error("unknown preset {name:?}; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("unknown {what} {name:?}; expected one of: {valid}")]
    UnknownName {
        what: &'static str,
        name: String,
        valid: &'static str,
    },

    #[error("invalid model configuration: {0}")]
    Config(String),

    #[error("{kind} index {index} out of range (have {len})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        len: usize,
    },

    #[error("length mismatch: {left} has {left_len}, {right} has {right_len}")]
    LengthMismatch {
        left: &'static str,
        left_len: usize,
        right: &'static str,
        right_len: usize,
    },

    #[error("weight vector is all zero; normalization is undefined")]
    ZeroWeights,

    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("checkpoint mismatch: {what} is {checkpoint} in the checkpoint but {dataset} in the dataset")]
    CheckpointMismatch {
        what: &'static str,
        checkpoint: usize,
        dataset: usize,
    },

    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },

    #[error("metadata error in {path}: {source}")]
    Metadata {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
