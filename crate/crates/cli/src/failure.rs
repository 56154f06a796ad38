use std::fmt::Display;

use mot_core::{MotError, Scalar};

pub const CONFIG: u8 = 2;
pub const NOT_IN_CONVEX_ORDER: u8 = 3;
pub const NUMERICAL: u8 = 4;
pub const SUPERHEDGE_VIOLATION: u8 = 5;
pub const COUNTEREXAMPLE_FAILED: u8 = 6;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Display) -> Self {
        Self { code, message: message.to_string() }
    }

    pub fn config(message: impl Display) -> Self {
        Self::new(CONFIG, message)
    }
}

impl From<MotError> for Failure {
    fn from(e: MotError) -> Self {
        let code = match &e {
            MotError::NotInConvexOrder(_) => NOT_IN_CONVEX_ORDER,
            MotError::NotOptimal(_)
            | MotError::NumericalFailure(_)
            | MotError::KernelNotMartingale(_)
            | MotError::PrimalNotSolved(_)
            | MotError::ModeratorInvalid => NUMERICAL,
            _ => CONFIG,
        };
        Self::new(code, e)
    }
}

/// `MOT_TOL` if set, else the report tolerance for the arithmetic in use.
pub fn tolerance<S: Scalar>() -> Result<S, Failure> {
    match std::env::var("MOT_TOL") {
        Ok(text) => match S::parse_str(text.trim()) {
            Some(t) if t >= S::zero() => Ok(t),
            _ => Err(Failure::config(format!("MOT_TOL must be a nonnegative number, got {text:?}"))),
        },
        Err(_) if S::EXACT => Ok(S::zero()),
        Err(_) => Ok(S::from_f64_exact(1e-9)),
    }
}

pub fn parse_scalar<S: Scalar>(what: &str, text: &str) -> Result<S, Failure> {
    S::parse_str(text.trim()).ok_or_else(|| Failure::config(format!("cannot parse {what} {text:?} as a number")))
}
