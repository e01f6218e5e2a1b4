use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },

    #[error("invalid ontology entry `{event_type}`: {message}")]
    Ontology { event_type: String, message: String },

    #[error("unknown event type `{name}` (nearest: {})", .nearest.join(", "))]
    UnknownEventType { name: String, nearest: Vec<String> },

    #[error("event type `{event_type}` has no role `{role}`")]
    UnknownRole { event_type: String, role: String },

    #[error("document `{doc_id}`: {message}")]
    Document { doc_id: String, message: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("generated sequence does not follow the template (anchor coverage {coverage:.2})")]
    Unparseable { coverage: f64 },

    #[error("token `{0}` is not in the backend vocabulary")]
    OutOfVocabulary(String),

    #[error("none of the keywords [{}] occur in the corpus", .0.join(", "))]
    NoKeywordOccurrence(Vec<String>),

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Diverged { epoch: usize, loss: f64 },

    #[error("document `{0}` appears in predictions but not in gold data")]
    DocMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, line_offset: usize, err: &serde_json::Error) -> Self {
        Error::Parse { path: path.into(), line: line_offset + err.line(), column: err.column(), message: err.to_string() }
    }
}
