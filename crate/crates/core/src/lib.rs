//! Robust pricing and semi-static superhedging of average-type payoffs
//! `f(\int X dA)` when only the laws of `X_0` and `X_T` are known.

pub mod auxiliary;
pub mod closed_forms;
pub mod convexfn;
pub mod counterexamples;
pub mod error;
pub mod hedging;
pub mod io;
pub mod lp;
pub mod measures;
pub mod par;
pub mod scalar;
pub mod simulation;

pub use error::{MotError, Result};
pub use scalar::{Rational, Scalar};
