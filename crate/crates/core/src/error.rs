use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("paper {paper_id}: {rule}")]
    InvalidRecord { paper_id: String, rule: String },

    #[error("duplicate paper_id {paper_id} on lines {first_line} and {second_line}")]
    DuplicatePaper {
        paper_id: String,
        first_line: usize,
        second_line: usize,
    },

    #[error("{} records rejected; first: {}", .0.len(), .0.first().map(|e| e.to_string()).unwrap_or_default())]
    Rejected(Vec<Error>),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("unknown author {0}")]
    UnknownAuthor(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mismatch: {0}")]
    Mismatch(String),

    #[error("pagerank did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {gradient_norm:e})")]
    FitNotConverged {
        iterations: usize,
        gradient_norm: f64,
    },

    #[error("design matrix is rank deficient (column {column})")]
    RankDeficient { column: String },

    #[error("unknown feature {0}")]
    UnknownFeature(String),

    #[error("missing data: {0}")]
    Missing(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short machine-readable tag used in CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::InvalidRecord { .. } => "invalid_record",
            Error::DuplicatePaper { .. } => "duplicate_paper",
            Error::Rejected(_) => "rejected",
            Error::Empty(_) => "empty",
            Error::UnknownAuthor(_) => "unknown_author",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Mismatch(_) => "mismatch",
            Error::NotConverged { .. } => "not_converged",
            Error::FitNotConverged { .. } => "fit_not_converged",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::UnknownFeature(_) => "unknown_feature",
            Error::Missing(_) => "missing",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
