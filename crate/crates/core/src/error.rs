use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AqsError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AqsError {
    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("token id {0} is not in the vocabulary")]
    VocabularyMismatch(u32),

    #[error("invalid token distribution: {0}")]
    InvalidDistribution(String),

    #[error("protocol error: {0}")]
    ProtocolError(String),

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate model: no hypothesis finished after {0} expansions")]
    DegenerateModel(usize),

    #[error("degenerate embedding: zero norm for {0:?}")]
    DegenerateEmbedding(String),

    #[error("no answers: every question-answering result was empty")]
    NoAnswers,

    #[error("zero variance in series")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: line {line}: parse error: {message}")]
    ParseError {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: line {line}: schema error: {message}")]
    SchemaError {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl AqsError {
    /// Stable short name of the error kind, used in serialized traces.
    pub fn kind(&self) -> &'static str {
        match self {
            AqsError::BackendUnavailable(_) => "BackendUnavailable",
            AqsError::VocabularyMismatch(_) => "VocabularyMismatch",
            AqsError::InvalidDistribution(_) => "InvalidDistribution",
            AqsError::ProtocolError(_) => "ProtocolError",
            AqsError::EmptyInput => "EmptyInput",
            AqsError::DegenerateModel(_) => "DegenerateModel",
            AqsError::DegenerateEmbedding(_) => "DegenerateEmbedding",
            AqsError::NoAnswers => "NoAnswers",
            AqsError::ZeroVariance => "ZeroVariance",
            AqsError::LengthMismatch { .. } => "LengthMismatch",
            AqsError::InvalidConfig(_) => "InvalidConfig",
            AqsError::ParseError { .. } => "ParseError",
            AqsError::SchemaError { .. } => "SchemaError",
            AqsError::Io(_) => "IoError",
        }
    }
}
