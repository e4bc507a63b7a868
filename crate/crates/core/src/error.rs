use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("relation `{name}` has arity {actual}, expected {expected}")]
    ArityMismatch {
        name: String,
        expected: usize,
        actual: usize,
    },

    #[error("{0}")]
    NotAPoset(String),

    #[error("element {element} out of range for universe of size {size}")]
    ElementOutOfRange { element: usize, size: usize },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unbound variable `{0}`")]
    UnboundVariable(String),

    #[error("expected free variables within {expected:?}, found {found:?}")]
    FreeVariables {
        expected: Vec<String>,
        found: Vec<String>,
    },

    #[error("quantifier depth {depth} exceeds cap {cap}")]
    QuantifierDepth { depth: usize, cap: usize },

    #[error("counting quantifier with threshold 0 is vacuous")]
    VacuousCount,

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("certificate failed to replay: {0}")]
    Replay(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
