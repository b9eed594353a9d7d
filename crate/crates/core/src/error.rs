use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("group context mismatch: {0}")]
    ContextMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integer overflow in group arithmetic")]
    Overflow,

    #[error("capacity exceeded for {what}: {got} > {limit}")]
    Capacity {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("conditioning on a zero-mass event")]
    EmptyConditioning,

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("probability masses sum to {0}, not 1")]
    MassSum(f64),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
