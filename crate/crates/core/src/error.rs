use thiserror::Error;

/// Errors raised while building, parsing or transforming presentations.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unbound name `{0}`")]
    UnboundName(String),
    #[error("duplicate vertex name `{0}`")]
    DuplicateName(String),
    #[error("invalid vertex name `{0}`")]
    InvalidName(String),
    #[error("zero multiplicity")]
    ZeroMultiplicity,
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("parallel edge {0} -- {1}")]
    ParallelEdge(String, String),
    #[error("edge {0} -- {1} has no endpoint at its own level")]
    ForeignEdge(String, String),
    #[error("distinguished vertex `{0}` is not a top-level vertex")]
    BadDistinguished(String),
    #[error("invalid location {0}")]
    InvalidLocation(String),
    #[error("invalid class path {0:?}")]
    InvalidClassPath(Vec<usize>),
    #[error("cannot remove {remove} copies from a class with multiplicity {current}")]
    RemovalExceedsMultiplicity { remove: u64, current: u64 },
    #[error("presentation is infinite")]
    Infinite,
    #[error("witness does not match the presentations: {0}")]
    StructuralMismatch(String),
    #[error("truncation parameter {n} too small, need at least {needed}")]
    TruncationTooSmall { n: usize, needed: usize },
    #[error("oracle limit: {0}")]
    OracleCap(String),
    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;
