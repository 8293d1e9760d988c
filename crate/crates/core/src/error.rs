use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate doc_id {0:?}")]
    DuplicateDocId(String),

    #[error("document {doc_id:?}: invalid span: {message}")]
    InvalidSpan { doc_id: String, message: String },

    #[error("document {0:?} is not annotated")]
    Unannotated(String),

    #[error("corpus too small to split: {0} documents (need at least 3)")]
    CorpusTooSmall(usize),

    #[error("invalid split fractions: test={test}, dev={dev}")]
    InvalidFractions { test: f64, dev: f64 },

    #[error("mentions of candidate {0:?} belong to different documents")]
    CrossDocument(String),

    #[error("empty training set for relation {0}")]
    EmptyTrainingSet(String),

    #[error("non-finite weight {weight} on {feature}")]
    NonFiniteWeight { feature: String, weight: f64 },

    #[error("invalid sampler parameters: n_samples={n_samples}, burn_in={burn_in}")]
    SamplerParams { n_samples: usize, burn_in: usize },

    #[error("secondary database {0} is not loaded")]
    DbUnloaded(String),

    #[error("invalid secondary database record at line {line}: {message}")]
    DbRecord { line: usize, message: String },

    #[error("synthetic spec has no templates")]
    NoTemplates,

    #[error("config error: {0}")]
    Config(String),

    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
