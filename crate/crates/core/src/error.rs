use std::path::PathBuf;

use crate::schema::{Language, TaskType};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid JSON on line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },

    #[error("malformed line {0}")]
    MalformedLine(usize),

    #[error("offset mismatch in document {doc}: mention {mention}")]
    OffsetMismatch { doc: String, mention: String },

    #[error("XML syntax error at byte {position}: {message}")]
    XmlSyntax { position: u64, message: String },

    #[error("relation {0} references an unknown annotation")]
    DanglingRef(String),

    #[error("illegal BIO tag on line {0}")]
    IllegalTag(usize),

    #[error("empty token on line {0}")]
    EmptyToken(usize),

    #[error("unknown dataset {0}")]
    UnknownDataset(String),

    #[error("dataset {0} is not registered")]
    UnregisteredDataset(String),

    #[error("duplicate dataset id {0} in registry")]
    DuplicateDataset(String),

    #[error("unknown task type {0:?}")]
    UnknownTaskType(String),

    #[error("unknown language code {0:?}")]
    UnknownLanguage(String),

    #[error("label {0} is absent from the corpus label vocabulary")]
    UnknownLabel(String),

    #[error("task {0} cannot be split into label subtasks")]
    NotDecomposable(TaskType),

    #[error("slot {{{0}}} cannot be filled")]
    MissingSlotData(String),

    #[error("no template for ({0}, {1})")]
    NoTemplate(TaskType, Language),

    #[error("template {template} is invalid: {reason}")]
    InvalidTemplate { template: String, reason: String },

    #[error("document {doc} does not carry the payload required by {task}")]
    PayloadMismatch { doc: String, task: TaskType },

    #[error("duplicate instance id {0}")]
    DuplicateInstance(String),

    #[error("instance {0} is not in the forged corpus")]
    UnknownInstance(String),

    #[error("length mismatch: {gold} gold vs {pred} predicted")]
    LengthMismatch { gold: usize, pred: usize },

    #[error("no metric defined for task {0}")]
    UnknownTaskMetric(TaskType),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
