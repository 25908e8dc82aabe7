use std::sync::Arc;

use super::{ExactFn, Model, Params};
use crate::lambert::lambert_w0;
use crate::{DdeProblem, DelaySpec, Discontinuity, HistoryFn, HistoryFunction, RhsFn, RhsInput};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// `u'(t) = u(u(t) - sqrt2 + 1) / (2 sqrt t)` on `[1, 5]` with `u = 1` for
/// `t <= 1`. The solution is `sqrt t` up to `t = 2`, where the deviating
/// argument crosses the initial point and a first-derivative kink of the
/// history propagates as a second-derivative jump.
pub fn test1() -> Model {
    let history = HistoryFunction::constant(vec![1.0], 1.0 - 3.1, 1.0);
    let rhs: RhsFn = Arc::new(|inp: &RhsInput<'_>, out: &mut [f64]| {
        out[0] = inp.delayed.get(0)[0] / (2.0 * inp.t.sqrt());
    });
    let problem = DdeProblem::new("test1", 1, history, 5.0, rhs)
        .with_delay_flagged(
            DelaySpec::StateDependent(Arc::new(|t, u: &[f64]| t - u[0] + SQRT2 - 1.0)),
            true,
        )
        .with_max_delay(3.1);
    let exact: ExactFn = Arc::new(|t| {
        vec![if t <= 1.0 {
            1.0
        } else if t <= 2.0 {
            t.sqrt()
        } else {
            t / 4.0 + 0.5 + (1.0 - 1.0 / SQRT2) * t.sqrt()
        }]
    });
    Model {
        name: "test1".into(),
        params: Params::new(),
        problem,
        exact: Some(exact),
        exact_breaking_points: vec![(1.0, 0), (2.0, 1)],
        thresholds: Vec::new(),
    }
}

/// `u'(t) = -u(t) - u(t - 1 - u(t))` on `[0, 1]` with a history that jumps
/// from 0 to 1 at `t = -1`. The deviating argument reaches `-1` at
/// `t = W(1)`, where the solution has a first-derivative jump.
pub fn test2() -> Model {
    let zero: HistoryFn = Arc::new(|_, o: &mut [f64]| o[0] = 0.0);
    let one: HistoryFn = Arc::new(|_, o: &mut [f64]| o[0] = 1.0);
    let history = HistoryFunction::piecewise(
        1,
        -2.5,
        0.0,
        vec![zero, one],
        vec![Discontinuity { t: -1.0, order: -1 }],
    )
    .expect("static history");
    let rhs: RhsFn = Arc::new(|inp: &RhsInput<'_>, out: &mut [f64]| {
        out[0] = -inp.u[0] - inp.delayed.get(0)[0];
    });
    let problem = DdeProblem::new("test2", 1, history, 1.0, rhs)
        .with_delay_flagged(
            DelaySpec::StateDependent(Arc::new(|_, u: &[f64]| 1.0 + u[0])),
            true,
        )
        .with_max_delay(2.5);
    let w1 = lambert_w0(1.0).expect("W(1) exists");
    let exact: ExactFn = Arc::new(move |t| {
        vec![if t < -1.0 {
            0.0
        } else if t <= 0.0 {
            1.0
        } else if t <= w1 {
            (-t).exp()
        } else {
            -1.0 + (-t).exp() * (1.0 + w1.exp())
        }]
    });
    Model {
        name: "test2".into(),
        params: Params::new(),
        problem,
        exact: Some(exact),
        exact_breaking_points: vec![(0.0, 0), (w1, 0)],
        thresholds: Vec::new(),
    }
}

/// `u'(t) = -u(t - |u(t)|)` with a history that is not Lipschitz at `-1`.
/// The initial value problem has (at least) two solutions on `[0, 1/4]`, see
/// [`winston_candidates`]; no uniqueness theorem applies.
pub fn winston() -> Model {
    let flat: HistoryFn = Arc::new(|_, o: &mut [f64]| o[0] = -1.0);
    let root: HistoryFn = Arc::new(|t, o: &mut [f64]| o[0] = 1.5 * (t + 1.0).cbrt() - 1.0);
    let line: HistoryFn = Arc::new(|t, o: &mut [f64]| o[0] = 10.0 / 7.0 * t + 1.0);
    let history = HistoryFunction::piecewise(
        1,
        -1.5,
        0.0,
        vec![flat, root, line],
        vec![
            Discontinuity { t: -1.0, order: 0 },
            Discontinuity {
                t: -0.875,
                order: 0,
            },
        ],
    )
    .expect("static history");
    let rhs: RhsFn = Arc::new(|inp: &RhsInput<'_>, out: &mut [f64]| {
        out[0] = -inp.delayed.get(0)[0];
    });
    let problem = DdeProblem::new("winston", 1, history, 0.25, rhs)
        .with_delay_flagged(
            DelaySpec::StateDependent(Arc::new(|_, u: &[f64]| u[0].abs())),
            false,
        )
        .with_max_delay(1.5);
    Model {
        name: "winston".into(),
        params: Params::new(),
        problem,
        exact: None,
        exact_breaking_points: Vec::new(),
        thresholds: Vec::new(),
    }
}

/// The two known solutions `1 + t` and `1 + t - t^(3/2)` of [`winston`].
pub fn winston_candidates() -> [ExactFn; 2] {
    [
        Arc::new(|t| vec![1.0 + t]),
        Arc::new(|t: f64| vec![1.0 + t - t.max(0.0).powf(1.5)]),
    ]
}
