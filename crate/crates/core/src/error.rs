use std::path::PathBuf;

use thiserror::Error;

use crate::mi::MiTrace;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures while reading IDX or dataset files.
#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("bad magic number {found:#010x} (expected {expected:#010x})")]
    BadMagic { found: u32, expected: u32 },
    #[error("unexpected rank {found} (expected {expected})")]
    BadRank { found: usize, expected: usize },
    #[error("truncated file: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("trailing bytes: expected {expected} bytes, found {found}")]
    TrailingBytes { expected: usize, found: usize },
    #[error("image/label count mismatch: {images} images vs {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("label value {0} outside 0..=9")]
    LabelOutOfRange(u8),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or hyperparameters that cannot describe a valid model.
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller violated an operation's precondition.
    #[error("usage error: {0}")]
    Usage(String),

    /// Numerical breakdown during optimisation.
    #[error("training error: {message}")]
    Training { message: String, diagnostics: String },

    /// The MI estimate left the admissible range; the trace up to the failure is attached.
    #[error("estimator diverged at iteration {iteration}: estimate {estimate}")]
    Divergence {
        iteration: usize,
        estimate: f64,
        trace: Box<MiTrace>,
    },

    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: ParseError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Usage(_) => "usage",
            Error::Training { .. } => "training",
            Error::Divergence { .. } => "divergence",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
            Error::Serde(_) => "serde",
        }
    }

    /// Extra context worth printing after the message, if any.
    pub fn diagnostics(&self) -> Option<String> {
        match self {
            Error::Training { diagnostics, .. } if !diagnostics.is_empty() => Some(diagnostics.clone()),
            Error::Divergence { trace, .. } => {
                let tail: Vec<String> = trace.raw.iter().rev().take(5).rev().map(|v| format!("{v:.4}")).collect();
                Some(format!("{} iterations recorded, last estimates [{}]", trace.raw.len(), tail.join(", ")))
            }
            _ => None,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn training(msg: impl Into<String>, diagnostics: impl Into<String>) -> Self {
        Error::Training {
            message: msg.into(),
            diagnostics: diagnostics.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, source: ParseError) -> Self {
        Error::Parse {
            path: path.into(),
            source,
        }
    }
}
