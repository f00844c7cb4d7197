use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("smote needs at least {needed} minority instances, got {available} (short by {})", needed - available)]
    TooFewMinority { needed: usize, available: usize },

    #[error("cannot split into {folds} folds: smallest class has {class_size} instances")]
    TooManyFolds { folds: usize, class_size: usize },

    #[error("empty vocabulary: no tokens in any document")]
    EmptyVocabulary,

    #[error("model format version {found} is not supported (expected {expected})")]
    ModelVersion { found: u32, expected: u32 },

    #[error("corrupt model file at byte offset {offset}: {message}")]
    CorruptModel { offset: usize, message: String },

    #[error("lexicon parse error on line {line}: {message}")]
    Lexicon { line: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
