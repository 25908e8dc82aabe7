use super::step::take_step;
use super::tableau::FcrkTableau;
use crate::breakpoints::{process_step, BreakingPointLedger, DetectionOptions, StepEvent};
use crate::{time_tol, BreakingPoint, DdeProblem, DenseSolution, Error, Result};

/// Recomputations of one step after crossings at its start, before the step
/// is accepted as is.
const MAX_REDOS: usize = 8;

/// Step-size selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// Constant step; the last step is shortened to land on `tf` and
    /// truncated steps do not change `h`.
    Fixed(f64),
    /// Proportional control on the embedded error estimate.
    Adaptive {
        rtol: f64,
        atol: f64,
        h_init: f64,
        h_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrateOptions {
    pub rule: StepRule,
    /// `None` disables breaking-point detection.
    pub detection: Option<DetectionOptions>,
}

impl IntegrateOptions {
    pub fn fixed(h: f64) -> Self {
        IntegrateOptions {
            rule: StepRule::Fixed(h),
            detection: Some(DetectionOptions::default()),
        }
    }

    pub fn without_detection(mut self) -> Self {
        self.detection = None;
        self
    }
}

/// Step size `h = (xi - t0) / (N + lambda)`, placing the first breaking point
/// `xi` at a fixed fraction `lambda` of a step.
pub fn lambda_step(t0: f64, xi: f64, n: usize, lambda: f64) -> f64 {
    (xi - t0) / (n as f64 + lambda)
}

/// Integrates `problem` from `t0` to `tf`.
pub fn integrate(
    problem: &DdeProblem,
    tab: &FcrkTableau,
    opts: &IntegrateOptions,
) -> Result<DenseSolution> {
    problem.validate()?;
    let t0 = problem.t0();
    let tf = problem.tf;
    let u0 = problem.initial_state()?;
    let mut sol = DenseSolution::new(tab.name, problem.history.clone(), u0.clone());
    for d in problem.history.discontinuities() {
        sol.breaking_points.push(BreakingPoint::given(d.t, d.order));
    }
    if !sol.breaking_points.iter().any(|b| b.location == t0) {
        sol.breaking_points
            .push(BreakingPoint::given(t0, problem.t0_order));
    }

    let mut ledger = match opts.detection {
        Some(o) => Some(BreakingPointLedger::new(
            problem,
            tab.order,
            &sol.breaking_points,
            &u0,
            o,
        )?),
        None => None,
    };

    let (mut h, adaptive) = match opts.rule {
        StepRule::Fixed(h) => (h, None),
        StepRule::Adaptive {
            rtol,
            atol,
            h_init,
            h_max,
        } => {
            if tab.embedded.is_none() {
                return Err(Error::InvalidParameter {
                    name: "rule".into(),
                    reason: format!("{} has no embedded error estimate", tab.name),
                });
            }
            (h_init, Some((rtol, atol, h_max)))
        }
    };
    if !(h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "h".into(),
            reason: "step size must be positive".into(),
        });
    }

    let mut t = t0;
    let mut u = u0;
    let mut redos = 0;
    let mut end = vec![0.0; problem.dim];
    while tf - t > time_tol(tf) {
        let mut h_try = h.min(tf - t);
        if tf - (t + h_try) <= time_tol(tf) {
            h_try = tf - t;
        }
        if h_try <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t, h: h_try });
        }
        let detect = ledger.as_ref().is_some_and(|l| l.active_at(t));
        let segments = if detect {
            ledger.as_ref().map(|l| l.segments())
        } else {
            None
        };
        let step = take_step(problem, &sol, tab, t, h_try, &u, segments.as_deref())?;

        if let Some((rtol, atol, h_max)) = adaptive {
            let emb = tab.embedded.as_ref().expect("checked above");
            step.eval_theta(1.0, &mut end);
            let mut err: f64 = 0.0;
            let w1 = tab.weights_at(1.0);
            for c in 0..problem.dim {
                let diff: f64 = step
                    .k
                    .iter()
                    .enumerate()
                    .map(|(i, k)| (w1[i] - emb[i]) * k[c])
                    .sum::<f64>()
                    * h_try;
                let sc = atol + rtol * u[c].abs().max(end[c].abs());
                err = err.max((diff / sc).abs());
            }
            let q = tab.order as f64;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-1.0 / q)).clamp(0.2, 5.0)
            };
            if err > 1.0 {
                h = h_try * factor.min(0.9);
                continue;
            }
            h = (h_try * factor).min(h_max);
        }

        let mut t_next = if h_try == tf - t { tf } else { t + h_try };
        if detect {
            let l = ledger.as_mut().expect("detect implies ledger");
            match process_step(l, problem, &step, &mut sol.breaking_points)? {
                StepEvent::Accept => {}
                StepEvent::TruncateAt(at) => t_next = at,
                StepEvent::Redo if redos < MAX_REDOS => {
                    redos += 1;
                    continue;
                }
                StepEvent::Redo => {
                    // The argument sits on a breaking point and the crossing
                    // direction flips with the frozen interval.
                    log::warn!("crossings at t = {t} keep alternating; accepting the step");
                }
            }
        }
        let piece = step.piece(t_next);
        piece.eval(t_next, &mut end);
        if let Some(g) = &problem.guard {
            g(t_next, &end)?;
        }
        u.copy_from_slice(&end);
        sol.push_step(piece);
        redos = 0;
        t = t_next;
    }
    Ok(sol)
}
