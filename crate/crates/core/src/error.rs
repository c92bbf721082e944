use thiserror::Error;

/// Errors produced by the analyzer.
///
/// The variants split into two families: malformed or invalid input
/// (everything except [`Error::Unsupported`]) and well-formed input that asks
/// for something the cost model does not cover.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A document could not be parsed. `line` is 1-based when known.
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        line: Option<usize>,
        message: String,
    },

    /// A field held a name outside its enumeration.
    #[error("unknown {field} `{value}` (expected one of: {expected})")]
    UnknownVariant {
        field: String,
        value: String,
        expected: &'static str,
    },

    /// Two consecutive layers disagree on the width passed between them.
    /// Layer indices are 1-based.
    #[error("dimension mismatch: layer {first} produces {produced} values but layer {second} expects {expected}")]
    DimensionMismatch {
        first: usize,
        second: usize,
        produced: usize,
        expected: usize,
    },

    #[error("invalid model: {0}")]
    Validation(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// Bad data row, `index` is 0-based over data rows (header excluded).
    #[error("bad data at row {index}: {message}")]
    Data { index: usize, message: String },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn from_toml(err: &toml::de::Error, source: &str) -> Self {
        let line = err
            .span()
            .map(|span| source[..span.start.min(source.len())].matches('\n').count() + 1);
        Error::Parse {
            line,
            message: err.message().trim().to_string(),
        }
    }

    /// True for errors caused by a configuration the model cannot analyze,
    /// as opposed to malformed input.
    pub fn is_unsupported(&self) -> bool {
        matches!(self, Error::Unsupported(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
