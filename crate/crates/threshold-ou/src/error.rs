//! Error type shared across the crate.

use std::fmt;

use crate::model::Side;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Parameter or argument validation failed.
    InvalidInput(String),
    /// An operation requiring ergodicity was called on a non-ergodic model.
    NotErgodic,
    /// The Euler scheme produced a non-finite or absurdly large value.
    Diverged { step: usize },
    /// One path of a Monte Carlo batch diverged.
    PathDiverged { path: usize, step: usize },
    /// The normal-equation determinant on one side is (numerically) zero.
    DegenerateSide(Side),
    /// No observation fell on the requested side.
    SideUnvisited(Side),
    /// Every candidate threshold was skipped during the grid search.
    NoValidCandidate,
    /// Adaptive quadrature exhausted its subdivision budget.
    QuadratureLimit,
    /// A covariance or information matrix is not positive definite.
    SingularMatrix,
    /// A malformed input file row.
    Parse { line: usize, message: String },
    /// Wrapped I/O failure.
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NotErgodic => write!(f, "model is not ergodic"),
            Error::Diverged { step } => write!(f, "simulation diverged at step {step}"),
            Error::PathDiverged { path, step } => {
                write!(f, "path {path} diverged at step {step}")
            }
            Error::DegenerateSide(side) => {
                write!(f, "degenerate statistics on the {side} side")
            }
            Error::SideUnvisited(side) => {
                write!(f, "no observations on the {side} side")
            }
            Error::NoValidCandidate => write!(f, "no valid threshold candidate"),
            Error::QuadratureLimit => write!(f, "quadrature subdivision limit reached"),
            Error::SingularMatrix => write!(f, "matrix is not positive definite"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
