use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid function: {0}")]
    InvalidFunction(String),
    #[error("measures are not in convex order: {0}")]
    NotInConvexOrder(String),
    /// The pair must be decomposed first; carries the open components found.
    #[error("pair is not irreducible ({reason}); {} component(s)", components.len())]
    NotIrreducible {
        reason: String,
        components: Vec<(f64, f64)>,
    },
    #[error("grid does not contain required point {0}")]
    GridTooCoarse(f64),
    #[error("kernel is not a martingale: {0}")]
    KernelNotMartingale(String),
    #[error("moderator is not concave on the domain")]
    ModeratorInvalid,
    #[error("point {0} lies outside the interior of the domain")]
    OutsideInterior(f64),
    #[error("linear program did not solve to optimality: {0}")]
    NotOptimal(String),
    #[error("primal problem has not been solved: {0}")]
    PrimalNotSolved(String),
    #[error("path {0} is not in the admissible path set")]
    PathOutsideOmega(usize),
    #[error("bad horizon: {0}")]
    BadHorizon(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("closed form does not apply: {0}")]
    ClosedFormInapplicable(String),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, MotError>;
