use std::fmt;

use thiserror::Error;

/// Errors raised by the attribution engine and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid feature space: {0}")]
    InvalidSpace(String),

    #[error("point has {got} values but the feature space has {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value {value} for feature '{feature}'")]
    NonFinite { feature: String, value: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{0}")]
    Parse(#[from] ParseError),

    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityDomain(f64),

    #[error("threshold {0} is outside the open interval (0, 1)")]
    InvalidThreshold(f64),

    #[error("subset size {size} is not below the player count {players}")]
    WeightDomain { size: usize, players: usize },

    #[error("invalid grouping: {0}")]
    InvalidGrouping(String),

    #[error(
        "{groups} attribution units would need 2^{groups} model evaluations; \
         at most {max} are supported, group correlated features with --groups"
    )]
    TooManyUnits { groups: usize, max: usize },

    #[error(
        "the {path} fast path cannot handle interaction terms of order {order}; use {suggestion}"
    )]
    Dispatch {
        path: &'static str,
        order: usize,
        suggestion: &'static str,
    },

    #[error("reference point is declined: p = {probability:.6} > tau = {threshold}")]
    ReferenceDeclined {
        point: Vec<f64>,
        probability: f64,
        threshold: f64,
    },

    #[error("no reference candidate: {0}")]
    NoReference(String),

    #[error("invalid quantile {0}; expected a value in (0, 1)")]
    InvalidQuantile(f64),

    #[error("dataset error: {0}")]
    Data(String),

    #[error("{0}")]
    Diagnostics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Kind of failure reported by the model-spec parser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    UnbalancedParenthesis,
    UnknownIdentifier,
    Arity,
    UnexpectedToken,
    UnexpectedEnd,
    UnknownLink,
    Empty,
}

/// A parse failure anchored at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(
        kind: ParseErrorKind,
        line: usize,
        column: usize,
        message: impl Into<String>,
    ) -> Self {
        Self {
            kind,
            line,
            column,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ParseError {}
