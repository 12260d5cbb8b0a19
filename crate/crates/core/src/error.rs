use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A market file does not conform to the tree schema.
    #[error("parse error at node {node:?}, field `{field}`: {message}")]
    Parse {
        node: Option<String>,
        field: String,
        message: String,
    },

    /// A structurally well-formed input violates a model invariant.
    #[error("validation error{}: {message}", node.as_deref().map(|n| format!(" at node `{n}`")).unwrap_or_default())]
    Validation {
        node: Option<String>,
        message: String,
    },

    /// An operation that needs successors was applied to a leaf.
    #[error("node `{node}` has no successors")]
    NoSuccessors { node: String },

    /// An operation restricted to one risky asset was applied elsewhere.
    #[error("dimension error: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    /// Price-series calibration rejected its input.
    #[error("calibration error: {0}")]
    Calibration(String),

    /// A linear program was malformed (inconsistent dimensions).
    #[error("LP format error: {0}")]
    Format(String),

    /// An instantaneous profit makes the requested quantity meaningless.
    #[error("instantaneous profit detected{}", node.as_deref().map(|n| format!(" at node `{n}`")).unwrap_or_default())]
    IpDetected { node: Option<String> },

    /// A payoff specification could not be parsed or evaluated.
    #[error("payoff error: {0}")]
    Payoff(String),

    /// Input exceeds the size budget of an exhaustive oracle.
    #[error("size error: {0}")]
    Size(String),

    /// An internal invariant was breached; indicates a bug.
    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(node: Option<&str>, field: &str, message: impl Into<String>) -> Self {
        Error::Parse {
            node: node.map(str::to_owned),
            field: field.to_owned(),
            message: message.into(),
        }
    }

    pub(crate) fn validation(node: Option<&str>, message: impl Into<String>) -> Self {
        Error::Validation {
            node: node.map(str::to_owned),
            message: message.into(),
        }
    }
}
