//! Threshold-defined delays `int_{t - tau(t)}^t V(s, u(s)) ds = a`.
//!
//! The standard treatment differentiates the condition, which turns `tau`
//! into an extra state component with
//! `tau' = 1 - V(t, u(t)) / V(t - tau, u(t - tau))`. Rounding and truncation
//! errors then accumulate in the integral condition; an optional penalty term
//! pulls the solution back onto it. The alternative "dummy delay" form
//! recovers `tau` at every evaluation from samples of `V` at fixed lags.

use std::fmt;
use std::sync::Arc;

use crate::quadrature::{gauss5, gauss5_split, integrate_past};
use crate::{
    DdeProblem, DelaySpec, DelayedValues, DenseSolution, Error, HistoryFunction, PastAccess,
    Result, RhsFn, RhsInput,
};

/// Velocity `V(t, u)`; most models ignore `t`.
pub type VelocityFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct ThresholdSpec {
    pub velocity: VelocityFn,
    pub a: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// `V` does not depend on `t` explicitly.
    pub autonomous: bool,
    /// State component holding `tau` once the problem has been augmented.
    pub delay_component: Option<usize>,
}

impl fmt::Debug for ThresholdSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ThresholdSpec")
            .field("a", &self.a)
            .field("v_min", &self.v_min)
            .field("v_max", &self.v_max)
            .field("autonomous", &self.autonomous)
            .field("delay_component", &self.delay_component)
            .finish()
    }
}

impl ThresholdSpec {
    pub fn new(velocity: VelocityFn, a: f64, v_min: f64, v_max: f64) -> Self {
        ThresholdSpec {
            velocity,
            a,
            v_min,
            v_max,
            autonomous: true,
            delay_component: None,
        }
    }

    pub fn non_autonomous(mut self) -> Self {
        self.autonomous = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(Error::InvalidProblem("threshold a must be positive".into()));
        }
        if !(self.v_min > 0.0 && self.v_min <= self.v_max) {
            return Err(Error::InvalidProblem(format!(
                "velocity bounds must satisfy 0 < v_min <= v_max (got {}, {})",
                self.v_min, self.v_max
            )));
        }
        Ok(())
    }

    pub fn velocity(&self, t: f64, u: &[f64]) -> f64 {
        (self.velocity)(t, u)
    }

    /// Errors when `V(t, u)` leaves `[v_min, v_max]`.
    pub fn check(&self, t: f64, u: &[f64]) -> Result<f64> {
        let v = self.velocity(t, u);
        let slack = 1e-12 * self.v_max;
        if !(v >= self.v_min - slack && v <= self.v_max + slack) {
            return Err(Error::VelocityBound {
                t,
                value: v,
                v_min: self.v_min,
                v_max: self.v_max,
            });
        }
        Ok(v)
    }
}

/// Solves `int_{t0 - tau}^{t0} V(s, phi(s)) ds = a` for the initial delay.
pub fn initial_threshold_delay(spec: &ThresholdSpec, history: &HistoryFunction) -> Result<f64> {
    spec.validate()?;
    let t0 = history.end();
    let dim = history.dim();
    let mut u = vec![0.0; dim];
    let mut v_at = |s: f64| {
        history.eval_piece(history.piece_index(s), s, &mut u);
        spec.velocity(s, &u)
    };
    if spec.autonomous {
        if let Some(c) = history.constant_value() {
            let v = spec.velocity(t0, c);
            let tau = spec.a / v;
            if t0 - tau < history.start() - crate::time_tol(history.start()) {
                return Err(Error::HistoryTooShort {
                    integral: v * (t0 - history.start()),
                    a: spec.a,
                });
            }
            return Ok(tau);
        }
    }
    // Walk back over chunks aligned with the history pieces.
    let start = history.start();
    let mut bounds: Vec<f64> = history.discontinuities().iter().map(|d| d.t).collect();
    let n_chunks = 512;
    let w = (t0 - start) / n_chunks as f64;
    bounds.extend((1..n_chunks).map(|i| start + i as f64 * w));
    bounds.push(start);
    bounds.sort_by(|a, b| b.total_cmp(a));
    bounds.dedup();
    let mut acc = 0.0;
    let mut hi = t0;
    for &lo in &bounds {
        if lo >= hi {
            continue;
        }
        let piece = gauss5(lo, hi, &mut v_at);
        if acc + piece >= spec.a {
            // F(tau) = acc + int_{t0 - tau}^{hi} V - a, increasing in tau.
            let f = |tau: f64, v_at: &mut dyn FnMut(f64) -> f64| {
                acc + gauss5(t0 - tau, hi, &mut *v_at) - spec.a
            };
            let (mut lo_tau, mut hi_tau) = (t0 - hi, t0 - lo);
            while hi_tau - lo_tau > 1e-14 * hi_tau.max(1.0) {
                let mid = 0.5 * (lo_tau + hi_tau);
                if f(mid, &mut v_at) < 0.0 {
                    lo_tau = mid;
                } else {
                    hi_tau = mid;
                }
            }
            let mut tau = 0.5 * (lo_tau + hi_tau);
            let v = v_at(t0 - tau);
            if v > 0.0 {
                tau -= f(tau, &mut v_at) / v;
            }
            return Ok(tau);
        }
        acc += piece;
        hi = lo;
    }
    Err(Error::HistoryTooShort {
        integral: acc,
        a: spec.a,
    })
}

/// A problem whose threshold delays have been turned into state components.
#[derive(Clone, Debug)]
pub struct Augmented {
    pub problem: DdeProblem,
    /// Dimension of the original state.
    pub original_dim: usize,
    /// `(delay index, spec)` for each threshold delay; the spec carries the
    /// component holding `tau`.
    pub thresholds: Vec<(usize, ThresholdSpec)>,
}

impl Augmented {
    pub fn tau_components(&self) -> Vec<usize> {
        self.thresholds
            .iter()
            .filter_map(|(_, s)| s.delay_component)
            .collect()
    }
}

/// Past access restricted to the first `dim` components.
struct Truncated<'a> {
    inner: &'a dyn PastAccess,
    full: usize,
}

impl PastAccess for Truncated<'_> {
    fn eval(&self, s: f64, out: &mut [f64]) {
        let mut buf = vec![0.0; self.full];
        self.inner.eval(s, &mut buf);
        out.copy_from_slice(&buf[..out.len()]);
    }

    fn knots(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        self.inner.knots(lo, hi, out)
    }
}

/// Appends one component `tau_k` per threshold delay, governed by the
/// differentiated threshold condition. With `penalty = Some(g)` the equation
/// gains `+ g (a - int_{t - tau}^t V)`, which makes the integral condition an
/// attracting invariant.
pub fn augment_problem(problem: &DdeProblem, penalty: Option<f64>) -> Result<Augmented> {
    let d = problem.dim;
    let mut thresholds = Vec::new();
    let mut taus0 = Vec::new();
    let mut delays = problem.delays.clone();
    for (j, spec) in problem.delays.iter().enumerate() {
        if let DelaySpec::Threshold(s) = spec {
            if s.delay_component.is_some() {
                return Err(Error::InvalidProblem(format!(
                    "threshold delay {j} is already augmented"
                )));
            }
            let tau0 = initial_threshold_delay(s, &problem.history)?;
            let mut s = s.clone();
            s.delay_component = Some(d + thresholds.len());
            delays[j] = DelaySpec::Threshold(s.clone());
            thresholds.push((j, s));
            taus0.push(tau0);
        }
    }
    if thresholds.is_empty() {
        return Err(Error::InvalidProblem(
            "problem has no threshold delay to augment".into(),
        ));
    }
    let m = thresholds.len();
    let inner = problem.rhs.clone();
    let ths = thresholds.clone();
    let nd = delays.len();
    let rhs: RhsFn = Arc::new(move |inp: &RhsInput<'_>, out: &mut [f64]| {
        let full = d + m;
        let mut delayed = vec![0.0; nd * d];
        for j in 0..nd {
            delayed[j * d..(j + 1) * d].copy_from_slice(&inp.delayed.get(j)[..d]);
        }
        let past = Truncated {
            inner: inp.past,
            full,
        };
        let sub = RhsInput {
            t: inp.t,
            u: &inp.u[..d],
            delayed: DelayedValues::new(&delayed, d),
            taus: inp.taus,
            past: &past,
        };
        inner(&sub, &mut out[..d]);
        for (k, (j, spec)) in ths.iter().enumerate() {
            let tau = inp.u[d + k];
            let v_now = spec.velocity(inp.t, &inp.u[..d]);
            let v_del = spec.velocity(inp.t - tau, &delayed[j * d..(j + 1) * d]);
            let mut rate = 1.0 - v_now / v_del;
            if let Some(g) = penalty {
                let integral =
                    integrate_past(&past, d, inp.t - tau, inp.t, |s, u| spec.velocity(s, u));
                rate += g * (spec.a - integral);
            }
            out[d + k] = rate;
        }
    });
    let guard_specs = thresholds.clone();
    let mut aug = DdeProblem {
        name: problem.name.clone(),
        dim: d + m,
        rhs,
        delays,
        monotone: problem.monotone.clone(),
        history: problem.history.with_constant_components(&taus0),
        initial_value: problem.initial_value.as_ref().map(|u0| {
            let mut v = u0.clone();
            v.extend_from_slice(&taus0);
            v
        }),
        tf: problem.tf,
        max_delay: problem.max_delay,
        t0_order: problem.t0_order,
        guard: None,
    };
    let prior = problem.guard.clone();
    aug.guard = Some(Arc::new(move |t: f64, u: &[f64]| {
        if let Some(g) = &prior {
            g(t, &u[..d])?;
        }
        for (_, s) in &guard_specs {
            s.check(t, &u[..d])?;
        }
        Ok(())
    }));
    Ok(Augmented {
        problem: aug,
        original_dim: d,
        thresholds,
    })
}

/// `int_{t - tau}^t V(s, u(s)) ds - a` along a computed solution, with `tau`
/// read from state component `tau_component`.
pub fn audit_threshold_residual(
    sol: &DenseSolution,
    spec: &ThresholdSpec,
    tau_component: usize,
    times: &[f64],
) -> Result<Vec<f64>> {
    let dim = sol.dim();
    let mut u = vec![0.0; dim];
    let mut knots = Vec::new();
    times
        .iter()
        .map(|&t| {
            let tau = sol.evaluate(t, None)?[tau_component];
            let lo = t - tau;
            if lo < sol.history().start() - crate::time_tol(lo) {
                return Err(Error::OutOfRange {
                    t: lo,
                    lo: sol.history().start(),
                    hi: sol.t_end(),
                });
            }
            knots.clear();
            sol.knots_in(lo, t, &mut knots);
            knots.sort_by(f64::total_cmp);
            let integral = gauss5_split(lo, t, &knots, 2, |s| {
                sol.eval_into(s, &mut u);
                spec.velocity(s, &u)
            });
            Ok(integral - spec.a)
        })
        .collect()
}

/// Threshold delay from velocities `V_j` sampled at the lags
/// `tau_j = j tau_max / N`, `j = 0..=N`: the trapezoidal integral is
/// accumulated until it reaches `a`, and the last interval is resolved with
/// `V` linear in the lag.
pub fn dummy_delay_threshold(velocities: &[f64], a: f64, tau_max: f64) -> Result<f64> {
    let n = velocities
        .len()
        .checked_sub(1)
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidParameter {
            name: "N".into(),
            reason: "need at least two velocity samples".into(),
        })?;
    let delta = tau_max / n as f64;
    let mut acc = 0.0;
    for j in 0..n {
        let (v0, v1) = (velocities[j], velocities[j + 1]);
        let next = acc + 0.5 * delta * (v0 + v1);
        if next >= a {
            let r = (a - acc) / delta;
            let dv = v1 - v0;
            let disc = (v0 * v0 + 2.0 * dv * r).max(0.0);
            let theta = 2.0 * r / (v0 + disc.sqrt());
            return Ok((j as f64 + theta) * delta);
        }
        acc = next;
    }
    Err(Error::HistoryTooShort { integral: acc, a })
}

/// Rewrites a threshold problem in dummy-delay form: each threshold delay is
/// replaced by `N + 1` constant lags spanning `[0, tau_max]`, and the delayed
/// value at the threshold delay is read from the past directly.
pub fn dummy_delay_problem(problem: &DdeProblem, n: usize, tau_max: f64) -> Result<DdeProblem> {
    let d = problem.dim;
    let orig = problem.delays.clone();
    let mut delays = Vec::new();
    let mut map = Vec::new();
    for spec in orig.iter() {
        match spec {
            DelaySpec::Threshold(s) => {
                let first = delays.len();
                delays.extend((0..=n).map(|i| DelaySpec::Constant(i as f64 * tau_max / n as f64)));
                map.push(Err((s.clone(), first)));
            }
            other => {
                map.push(Ok(delays.len()));
                delays.push(other.clone());
            }
        }
    }
    let nd_orig = orig.len();
    let inner = problem.rhs.clone();
    let rhs: RhsFn = Arc::new(move |inp: &RhsInput<'_>, out: &mut [f64]| {
        let mut delayed = vec![0.0; nd_orig * d];
        let mut taus = vec![0.0; nd_orig];
        let mut vel = vec![0.0; n + 1];
        for (j, m) in map.iter().enumerate() {
            let slot = &mut delayed[j * d..(j + 1) * d];
            match m {
                Ok(k) => {
                    slot.copy_from_slice(inp.delayed.get(*k));
                    taus[j] = inp.taus[*k];
                }
                Err((spec, first)) => {
                    for (i, v) in vel.iter_mut().enumerate() {
                        let lag = i as f64 * tau_max / n as f64;
                        *v = spec.velocity(inp.t - lag, inp.delayed.get(first + i));
                    }
                    let tau = dummy_delay_threshold(&vel, spec.a, tau_max).unwrap_or(f64::NAN);
                    taus[j] = tau;
                    inp.past.eval(inp.t - tau, slot);
                }
            }
        }
        let sub = RhsInput {
            t: inp.t,
            u: inp.u,
            delayed: DelayedValues::new(&delayed, d),
            taus: &taus,
            past: inp.past,
        };
        inner(&sub, out);
    });
    let mut p = problem.clone();
    p.rhs = rhs;
    p.monotone = vec![true; delays.len()];
    p.delays = delays;
    p.max_delay = problem.max_delay.max(tau_max);
    Ok(p)
}
