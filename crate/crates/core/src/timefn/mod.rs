//! Exact algebra of piecewise-constant and piecewise-linear functions of time.
//!
//! Rates (inflows, outflows, capacities given as rates) are [`StepFn`]s:
//! right-continuous, zero outside their declared support. Cumulatives, volumes,
//! queues, delays and arrival-time maps are [`PwlFn`]s: continuous, linear
//! between knots, constant-extended outside. Both are backed by the exact
//! rational scalar [`Rat`], so every integral, composition and inversion is
//! computed without rounding.

mod pwl;
mod rat;
mod step;

pub use pwl::{integrate_step_times_pwl, PwlFn};
pub use rat::Rat;
pub use step::StepFn;

use thiserror::Error;

/// Errors from constructing or transforming time functions.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TimeFnError {
    #[error("breakpoints must be strictly increasing (offender at index {0})")]
    NotIncreasing(usize),
    #[error("expected {expected} values for {breakpoints} breakpoints, got {got}")]
    LengthMismatch {
        breakpoints: usize,
        expected: usize,
        got: usize,
    },
    #[error("function is not invertible: {0}")]
    NotMonotone(String),
    #[error("piecewise-linear function needs at least one knot")]
    Empty,
    #[error("malformed number: {0}")]
    BadNumber(String),
}
