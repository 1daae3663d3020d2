use thiserror::Error;

use dbound_milp::{LpParseError, SolveError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid {field}: {msg}")]
    Validation { field: String, msg: String },
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("district {district} has a zero denominator")]
    ZeroDenominator { district: usize },
    #[error("probability {0} is outside (0, 1)")]
    Domain(f64),
    #[error("assignment does not match the instance: {0}")]
    BadAssignment(String),
    #[error("objective needs vote fields, which this instance lacks")]
    MissingVotes,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BreakpointError {
    #[error("invalid breakpoint request: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GrayError {
    #[error("index {i} does not fit in {nu} bits")]
    Range { i: usize, nu: usize },
    #[error("point ({0}, {1}) is outside the cone 0 <= x2 <= x1")]
    Domain(f64, f64),
    #[error("codes need at least one bit")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("relaxation does not support this objective: {0}")]
    Unsupported(String),
    #[error("invalid relaxation options: {0}")]
    Invalid(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Gray(#[from] GrayError),
    #[error(transparent)]
    Breakpoints(#[from] BreakpointError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnapsackError {
    #[error("mass M = {m} is outside [a n, b n] = [{lo}, {hi}]")]
    InfeasibleMass { m: f64, lo: f64, hi: f64 },
    #[error("d_r is undefined at the center r = c")]
    AtCenter,
    #[error("invalid knapsack data: {0}")]
    Invalid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("enumeration is limited to n <= {limit} nodes, instance has {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("no feasible contiguous partition")]
    Infeasible,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Top-level error with the failing module named in the message.
#[derive(Debug, Error)]
pub enum Error {
    #[error("instance: {0}")]
    Instance(#[from] InstanceError),
    #[error("probit: {0}")]
    Objective(#[from] ObjectiveError),
    #[error("breakpoints: {0}")]
    Breakpoints(#[from] BreakpointError),
    #[error("relax: {0}")]
    Relax(#[from] RelaxError),
    #[error("milp: {0}")]
    Solve(#[from] SolveError),
    #[error("milp: {0}")]
    LpParse(#[from] LpParseError),
    #[error("knapsack: {0}")]
    Knapsack(#[from] KnapsackError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("prebounds: {0}")]
    Prebounds(String),
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
