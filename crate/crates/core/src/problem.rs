use std::fmt;
use std::sync::Arc;

use crate::threshold::ThresholdSpec;
use crate::{Error, HistoryFunction, Result};

/// A delay `tau(t, u(t))`.
pub type DelayFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// Right-hand side. Writes `du/dt` into the output slice.
pub type RhsFn = Arc<dyn Fn(&RhsInput<'_>, &mut [f64]) + Send + Sync>;

/// Check run on every accepted mesh point `(t, u)`.
pub type GuardFn = Arc<dyn Fn(f64, &[f64]) -> Result<()> + Send + Sync>;

/// Read access to the numerical solution behind the current stage.
///
/// For `s` up to the start of the current step this is the dense output; past
/// it, the stage interpolant of the stage being evaluated.
pub trait PastAccess {
    fn eval(&self, s: f64, out: &mut [f64]);

    /// Appends the interior knots (mesh points) in `(lo, hi)` to `out`, so
    /// that quadrature over the past can be split into smooth pieces.
    fn knots(&self, lo: f64, hi: f64, out: &mut Vec<f64>);
}

/// Delayed values `u(alpha_j)`, one `dim`-vector per delay.
#[derive(Clone, Copy)]
pub struct DelayedValues<'a> {
    data: &'a [f64],
    dim: usize,
}

impl<'a> DelayedValues<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Self {
        debug_assert!(dim == 0 || data.len().is_multiple_of(dim));
        DelayedValues { data, dim }
    }

    pub fn get(&self, j: usize) -> &'a [f64] {
        &self.data[j * self.dim..(j + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Everything the right-hand side may look at.
pub struct RhsInput<'a> {
    pub t: f64,
    pub u: &'a [f64],
    pub delayed: DelayedValues<'a>,
    /// Current delay values `tau_j = t - alpha_j`.
    pub taus: &'a [f64],
    pub past: &'a dyn PastAccess,
}

#[derive(Clone)]
pub enum DelaySpec {
    Constant(f64),
    StateDependent(DelayFn),
    /// Like `StateDependent`, but the deviating argument is `min(t, t - tau)`.
    ClampedStateDependent(DelayFn),
    /// A delay defined implicitly by a threshold condition. Must be augmented
    /// (see [`crate::threshold::augment_problem`]) before integration unless
    /// the spec already names the state component carrying `tau`.
    Threshold(ThresholdSpec),
}

impl fmt::Debug for DelaySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DelaySpec::Constant(tau) => write!(f, "Constant({tau})"),
            DelaySpec::StateDependent(_) => f.write_str("StateDependent"),
            DelaySpec::ClampedStateDependent(_) => f.write_str("ClampedStateDependent"),
            DelaySpec::Threshold(s) => write!(f, "Threshold(a = {})", s.a),
        }
    }
}

/// A delay differential equation `u'(t) = f(t, u(t), u(alpha_1), ...)` on
/// `[t0, tf]` with history on `[t0 - max_delay, t0]`.
#[derive(Clone)]
pub struct DdeProblem {
    pub name: String,
    pub dim: usize,
    pub rhs: RhsFn,
    pub delays: Vec<DelaySpec>,
    /// Per delay: is `alpha_j(t)` non-decreasing along solutions?
    pub monotone: Vec<bool>,
    pub history: HistoryFunction,
    /// Overrides `u(t0)`; when it differs from the history, `t0` is a jump.
    pub initial_value: Option<Vec<f64>>,
    pub tf: f64,
    /// Upper bound on the constant and state-dependent delays.
    pub max_delay: f64,
    /// Smoothness order of the solution at `t0`.
    pub t0_order: i32,
    pub guard: Option<GuardFn>,
}

impl fmt::Debug for DdeProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DdeProblem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("delays", &self.delays)
            .field("monotone", &self.monotone)
            .field("t0", &self.t0())
            .field("tf", &self.tf)
            .field("max_delay", &self.max_delay)
            .finish()
    }
}

impl DdeProblem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        history: HistoryFunction,
        tf: f64,
        rhs: RhsFn,
    ) -> Self {
        DdeProblem {
            name: name.into(),
            dim,
            rhs,
            delays: Vec::new(),
            monotone: Vec::new(),
            history,
            initial_value: None,
            tf,
            max_delay: 0.0,
            t0_order: 0,
            guard: None,
        }
    }

    /// Adds a delay. Constant and threshold delays are flagged monotone.
    pub fn with_delay(mut self, spec: DelaySpec) -> Self {
        let mono = matches!(spec, DelaySpec::Constant(_) | DelaySpec::Threshold(_));
        if let DelaySpec::Constant(tau) = spec {
            self.max_delay = self.max_delay.max(tau);
        }
        self.delays.push(spec);
        self.monotone.push(mono);
        self
    }

    /// Adds a delay with an explicit monotonicity flag.
    pub fn with_delay_flagged(mut self, spec: DelaySpec, monotone: bool) -> Self {
        self = self.with_delay(spec);
        *self.monotone.last_mut().unwrap() = monotone;
        self
    }

    pub fn with_max_delay(mut self, tau: f64) -> Self {
        self.max_delay = tau;
        self
    }

    pub fn with_initial_value(mut self, u0: Vec<f64>) -> Self {
        self.initial_value = Some(u0);
        self.t0_order = -1;
        self
    }

    pub fn with_t0_order(mut self, order: i32) -> Self {
        self.t0_order = order;
        self
    }

    pub fn with_guard(mut self, guard: GuardFn) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn t0(&self) -> f64 {
        self.history.end()
    }

    pub fn initial_state(&self) -> Result<Vec<f64>> {
        match &self.initial_value {
            Some(u0) => Ok(u0.clone()),
            None => self.history.value(self.t0()),
        }
    }

    /// How far back the delays may reach.
    pub fn reach(&self) -> f64 {
        self.delays
            .iter()
            .map(|d| match d {
                DelaySpec::Threshold(s) => s.a / s.v_min,
                _ => self.max_delay,
            })
            .fold(0.0, f64::max)
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidProblem(m));
        if self.dim == 0 {
            return bad("dimension must be positive".into());
        }
        if self.history.dim() != self.dim {
            return bad(format!(
                "history dimension {} differs from problem dimension {}",
                self.history.dim(),
                self.dim
            ));
        }
        if self.monotone.len() != self.delays.len() {
            return bad("one monotonicity flag per delay required".into());
        }
        if let Some(u0) = &self.initial_value {
            if u0.len() != self.dim {
                return bad("initial value has wrong dimension".into());
            }
        }
        if !(self.tf > self.t0()) {
            return bad(format!("tf = {} must exceed t0 = {}", self.tf, self.t0()));
        }
        let reach = self.reach();
        let need = self.t0() - reach;
        if self.history.start() > need + crate::time_tol(need) {
            return bad(format!(
                "history starts at {} but delays may reach back to {}",
                self.history.start(),
                need
            ));
        }
        for (j, d) in self.delays.iter().enumerate() {
            match d {
                DelaySpec::Constant(tau) if !(*tau >= 0.0) => {
                    return bad(format!("constant delay {j} is negative"));
                }
                DelaySpec::Threshold(s) => {
                    s.validate()?;
                    match s.delay_component {
                        Some(c) if c < self.dim => {}
                        _ => {
                            return bad(format!(
                                "threshold delay {j} has not been augmented into the state"
                            ))
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// The deviating argument `alpha_j(t, u)` of delay `j`.
pub fn delayed_argument(problem: &DdeProblem, j: usize, t: f64, u: &[f64]) -> Result<f64> {
    match &problem.delays[j] {
        DelaySpec::Constant(tau) => Ok(t - tau),
        DelaySpec::StateDependent(f) => {
            let tau = f(t, u);
            if tau < 0.0 {
                return Err(Error::AdvanceDetected { t, delay: j, tau });
            }
            Ok(t - tau)
        }
        DelaySpec::ClampedStateDependent(f) => Ok(t.min(t - f(t, u))),
        DelaySpec::Threshold(s) => match s.delay_component {
            Some(c) => {
                let tau = u[c];
                if tau < 0.0 {
                    return Err(Error::AdvanceDetected { t, delay: j, tau });
                }
                Ok(t - tau)
            }
            None => Err(Error::InvalidProblem(
                "threshold delay evaluated before augmentation".into(),
            )),
        },
    }
}

/// The delay value `tau_j(t, u)` as seen by the right-hand side.
pub(crate) fn delay_value(problem: &DdeProblem, j: usize, t: f64, u: &[f64]) -> f64 {
    match &problem.delays[j] {
        DelaySpec::Constant(tau) => *tau,
        DelaySpec::StateDependent(f) | DelaySpec::ClampedStateDependent(f) => f(t, u),
        DelaySpec::Threshold(s) => s.delay_component.map_or(f64::NAN, |c| u[c]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(tf: f64) -> DdeProblem {
        let h = HistoryFunction::constant(vec![1.0], -2.0, 0.0);
        DdeProblem::new(
            "p",
            1,
            h,
            tf,
            Arc::new(|i: &RhsInput, o: &mut [f64]| o[0] = -i.u[0]),
        )
    }

    #[test]
    fn clamped_argument_never_exceeds_t() {
        let p = scalar(1.0).with_delay(DelaySpec::ClampedStateDependent(Arc::new(
            |_, u: &[f64]| 1.0 + u[0],
        )));
        assert_eq!(delayed_argument(&p, 0, 3.0, &[-4.0]).unwrap(), 3.0);
        assert_eq!(delayed_argument(&p, 0, 3.0, &[0.5]).unwrap(), 1.5);
    }

    #[test]
    fn unclamped_advance_is_an_error() {
        let p = scalar(1.0).with_delay(DelaySpec::StateDependent(Arc::new(|_, u: &[f64]| {
            1.0 + u[0]
        })));
        assert!(matches!(
            delayed_argument(&p, 0, 3.0, &[-4.0]),
            Err(Error::AdvanceDetected { .. })
        ));
    }

    #[test]
    fn validate_checks_history_reach() {
        let p = scalar(1.0).with_delay(DelaySpec::Constant(3.0));
        assert!(p.validate().is_err());
        let p = scalar(1.0).with_delay(DelaySpec::Constant(2.0));
        assert!(p.validate().is_ok());
    }
}
