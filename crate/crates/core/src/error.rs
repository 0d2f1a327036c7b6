use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{what} out of range: {value} (expected {range})")]
    OutOfRange {
        what: &'static str,
        value: usize,
        range: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The c_couple database grew past its entry cap.
    #[error("subsumption database exceeded {cap} entries; the {model} model is intractable here")]
    BudgetExceeded { model: &'static str, cap: usize },

    #[error("instance generation exceeded its time limit")]
    GenerationTimeout,

    #[error("brute-force search refused: {bits} candidate bits exceeds the limit of {limit}")]
    OracleBound { bits: usize, limit: usize },

    #[error("solver command template must contain exactly one `{{cnf}}` placeholder: {0:?}")]
    SolverTemplate(String),

    #[error("failed to spawn solver `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: io::Error,
    },

    #[error("malformed solver output at line {line}: {text:?}")]
    SolverOutput { line: usize, text: String },

    #[error("model does not assign variable {0}")]
    MissingVariable(u32),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    pub fn file(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::File {
            path: path.into(),
            source,
        }
    }
}
