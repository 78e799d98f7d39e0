use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invariant violated at level {level}: {msg}")]
    Invariant { level: usize, msg: String },
    #[error("not certified: {0}")]
    NotCertified(String),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("evaluation error: {0}")]
    Eval(String),
    #[error("unbounded enclosure: {0}")]
    Unbounded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
