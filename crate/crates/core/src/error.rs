use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid tree shape: {0}")]
    InvalidShape(String),

    #[error("ball of depth {depth} has {vertices} vertices, over the budget of {budget}")]
    BudgetExceeded { depth: usize, vertices: u128, budget: usize },

    #[error("invalid address {address}: {reason}")]
    InvalidAddress { address: String, reason: String },

    #[error("invalid automorphism: {0}")]
    InvalidAutomorphism(String),

    #[error("missing values: {0}")]
    MissingValues(String),

    #[error("not an eigenfunction: {0}")]
    NotEigen(String),

    #[error("excluded eigenvalue alpha = {alpha}: {reason}")]
    ExcludedAlpha { alpha: String, reason: String },

    #[error("function outside the admissible subspace: {0}")]
    Inadmissible(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
