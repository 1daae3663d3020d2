use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable {0} has an id that does not match its position")]
    VarIdMismatch(String),
    #[error("variable {0} has invalid bounds")]
    BadBounds(String),
    #[error("{0} references unknown variable {1}")]
    UnknownVar(String, usize),
    #[error("{0} lists variable {1} more than once")]
    DuplicateVar(String, usize),
    #[error("{0} has a non-finite coefficient or right-hand side")]
    NonFinite(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("numerical failure at node {node}: {reason}")]
    Numerical { node: usize, reason: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing section {0}")]
    MissingSection(&'static str),
}
