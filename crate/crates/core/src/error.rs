use thiserror::Error;

/// Errors raised by the simulation and its file formats.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation supports.
    #[error("domain error: {0}")]
    Domain(String),

    /// The weighted feature vector of a point has zero norm and cannot be
    /// normalized into a photon state.
    #[error("degenerate encoding: {0}")]
    DegenerateEncoding(String),

    /// No point of a class could be encoded.
    #[error("empty class: {0}")]
    EmptyClass(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("invalid config: {0}")]
    Config(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }

    /// True for errors that come from bad input files rather than numerics.
    pub fn is_data_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io(_) | Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
