use std::path::PathBuf;

use thiserror::Error;

use crate::scoring::external::TransportError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read or write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("stratum `{stratum}` has {available} members but {required} are required")]
    StratumTooSmall {
        stratum: String,
        required: usize,
        available: usize,
    },

    #[error("no pairable values for agreement")]
    NoPairableValues,

    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("malformed json in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Transport(#[from] TransportError),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }

    /// Short machine-readable category used in CLI error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::InvalidInput(_) => "invalid_input",
            Error::Degenerate(_) => "degenerate",
            Error::ZeroVariance(_) => "zero_variance",
            Error::StratumTooSmall { .. } => "stratum_too_small",
            Error::NoPairableValues => "no_pairable_values",
            Error::RankDeficient(_) => "rank_deficient",
            Error::UnknownVariable(_) => "unknown_variable",
            Error::Json { .. } => "json",
            Error::Transport(_) => "external_scorer",
        }
    }
}
