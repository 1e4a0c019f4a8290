use thiserror::Error;

/// Errors produced by the word, current, tree and dynamics layers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("certification failed for letter `{letter}`: {detail}")]
    Certification { letter: String, detail: String },

    #[error("did not converge after {iterations} iterations (last estimate {last_estimate})")]
    Convergence { iterations: usize, last_estimate: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },
}

impl Error {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Prefixes the location of a configuration error with `prefix`.
    pub fn at(self, prefix: &str) -> Self {
        match self {
            Error::Config { path, message } => Error::Config {
                path: if path.is_empty() {
                    prefix.to_string()
                } else {
                    format!("{prefix}.{path}")
                },
                message,
            },
            other => Error::Config {
                path: prefix.to_string(),
                message: other.to_string(),
            },
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
