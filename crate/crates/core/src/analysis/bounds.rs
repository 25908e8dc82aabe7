use std::fmt;
use std::sync::Arc;

use crate::models::TwoStateParams;
use crate::{Error, GuardFn};

/// The open interval that solutions of the two-delay equation cannot leave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInterval {
    /// `-a1 / c1`.
    pub lo: f64,
    /// `a1 (kappa1 + kappa2) / (gamma c1)`.
    pub hi: f64,
    /// History length `max_j { a_j + c_j hi }` the bound needs.
    pub tau0: f64,
}

impl BoundInterval {
    pub fn contains(&self, u: f64) -> bool {
        u > self.lo && u < self.hi
    }

    /// Guard that fails the integration as soon as a mesh value leaves the
    /// interval.
    pub fn guard(&self) -> GuardFn {
        let b = *self;
        Arc::new(move |t, u: &[f64]| {
            if b.contains(u[0]) {
                Ok(())
            } else {
                Err(Error::Domain(format!(
                    "u = {} left ({}, {}) at t = {t}",
                    u[0], b.lo, b.hi
                )))
            }
        })
    }
}

/// A violated hypothesis of the boundedness result.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub inequality: String,
}

impl fmt::Display for BoundViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "precondition failed: {}", self.inequality)
    }
}

impl std::error::Error for BoundViolation {}

fn violated(s: String) -> BoundViolation {
    BoundViolation { inequality: s }
}

/// Checks `gamma > kappa2` (with positive `a_j`, `c_j`, `kappa_j`) and that
/// the history, sampled at `samples + 1` points of `[-tau0, 0]`, stays in
/// the open interval.
pub fn boundedness_guard(
    p: &TwoStateParams,
    history: &dyn Fn(f64) -> f64,
    samples: usize,
) -> Result<BoundInterval, BoundViolation> {
    for (name, v) in [
        ("a1", p.a1),
        ("a2", p.a2),
        ("c1", p.c1),
        ("c2", p.c2),
        ("kappa1", p.kappa1),
        ("kappa2", p.kappa2),
    ] {
        if !(v > 0.0) {
            return Err(violated(format!("{name} = {v} > 0")));
        }
    }
    if !(p.gamma > p.kappa2) {
        return Err(violated(format!(
            "gamma = {} > kappa2 = {}",
            p.gamma, p.kappa2
        )));
    }
    let b = BoundInterval {
        lo: -p.a1 / p.c1,
        hi: p.upper_bound(),
        tau0: p.delay_bound(),
    };
    let n = samples.max(1);
    for i in 0..=n {
        let t = -b.tau0 + b.tau0 * i as f64 / n as f64;
        let v = history(t);
        if !b.contains(v) {
            return Err(violated(format!("{} < phi({t}) = {v} < {}", b.lo, b.hi)));
        }
    }
    Ok(b)
}
