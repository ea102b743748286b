use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty utterance")]
    EmptyUtterance,

    #[error("no fitting data")]
    NoFittingData,

    #[error("state not seeded with centroid")]
    StateNotSeeded,

    #[error("empty corpus")]
    EmptyCorpus,

    #[error("insufficient history: no turn has {window} prior user turns and a successor")]
    InsufficientHistory { window: usize },

    #[error("session {session_id} has {user_turns} user turns, at least 3 are required")]
    SessionTooShort {
        session_id: String,
        user_turns: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("participant keys differ; missing from first: {missing_in_a:?}, missing from second: {missing_in_b:?}")]
    KeyMismatch {
        missing_in_a: Vec<String>,
        missing_in_b: Vec<String>,
    },

    #[error("lexicon {name}: {reason}")]
    Lexicon { name: String, reason: String },

    #[error("unknown corpus format `{0}`")]
    UnknownFormat(String),

    #[error("malformed input at {location}: {reason}")]
    Malformed { location: String, reason: String },

    #[error("generator failed after {attempts} attempts: {reason}")]
    Generator { attempts: u32, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
