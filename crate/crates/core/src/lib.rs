//! Functional continuous Runge-Kutta solvers for delay differential equations
//! with state-dependent and threshold-defined delays.
//!
//! The crate is organised around a [`DdeProblem`] (right-hand side, delays,
//! history) and a [`DenseSolution`] (piecewise polynomial interpolant plus the
//! breaking points found along the way). [`fcrk::integrate`] drives a fixed
//! tableau over a step-size rule, optionally locating breaking points of the
//! solution with [`breakpoints`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod breakpoints;
pub mod convergence;
mod error;
pub mod fcrk;
mod history;
pub mod lambert;
pub mod models;
mod problem;
pub mod quadrature;
pub mod rng;
mod solution;
pub mod threshold;

pub use error::{Error, Result};
pub use history::{Discontinuity, HistoryFn, HistoryFunction};
pub use problem::{
    delayed_argument, DdeProblem, DelayFn, DelaySpec, DelayedValues, GuardFn, PastAccess, RhsFn,
    RhsInput,
};
pub use solution::{BreakingPoint, DenseSolution, Parent, PieceRef, Side, StepPiece, Tier};

/// Tolerance used when comparing two time instants.
pub fn time_tol(t: f64) -> f64 {
    1e-12 * t.abs().max(1.0)
}

/// True when `a` and `b` coincide up to [`time_tol`].
pub fn times_close(a: f64, b: f64) -> bool {
    (a - b).abs() <= time_tol(a.abs().max(b.abs()))
}
