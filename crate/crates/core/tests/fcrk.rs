use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use sdde_core::convergence::fit_slope;
use sdde_core::fcrk::{
    fcrk1, fcrk2, fcrk3, fcrk4, integrate, verify_order_conditions, FcrkTableau, IntegrateOptions,
};
use sdde_core::models::test1;
use sdde_core::{DdeProblem, DelaySpec, HistoryFunction, RhsFn, RhsInput};

fn methods() -> [FcrkTableau; 4] {
    [fcrk1(), fcrk2(), fcrk3(), fcrk4()]
}

fn decay() -> DdeProblem {
    let rhs: RhsFn = Arc::new(|inp: &RhsInput<'_>, out: &mut [f64]| out[0] = -inp.u[0]);
    DdeProblem::new(
        "decay",
        1,
        HistoryFunction::constant(vec![1.0], 0.0, 0.0),
        0.1,
        rhs,
    )
}

/// `u'(t) = -k u(t - tau)` with history `f` on `[-tau, 0]`.
fn lagged(k: f64, tau: f64, tf: f64, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> DdeProblem {
    let rhs: RhsFn = Arc::new(move |inp: &RhsInput<'_>, out: &mut [f64]| {
        out[0] = -k * inp.delayed.get(0)[0];
    });
    let history = HistoryFunction::smooth(1, -tau, 0.0, Arc::new(move |t, o| o[0] = f(t)));
    DdeProblem::new("lagged", 1, history, tf, rhs).with_delay(DelaySpec::Constant(tau))
}

fn sup_error(p: &DdeProblem, tab: &FcrkTableau, h: f64, exact: &dyn Fn(f64) -> f64) -> f64 {
    let sol = integrate(p, tab, &IntegrateOptions::fixed(h)).unwrap();
    let mut buf = [0.0];
    let mut err: f64 = 0.0;
    for piece in sol.steps() {
        for i in 0..=8 {
            let t = piece.t_start + (piece.t_end - piece.t_start) * i as f64 / 8.0;
            piece.eval(t, &mut buf);
            err = err.max((buf[0] - exact(t)).abs());
        }
    }
    err
}

fn slope(p: &DdeProblem, tab: &FcrkTableau, hs: &[f64], exact: &dyn Fn(f64) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .map(|&h| (h, sup_error(p, tab, h, exact)))
        .collect();
    fit_slope(&pts).unwrap()
}

#[test]
fn single_step_of_the_low_order_methods() {
    let p = decay();
    let euler = integrate(&p, &fcrk1(), &IntegrateOptions::fixed(0.1)).unwrap();
    let heun = integrate(&p, &fcrk2(), &IntegrateOptions::fixed(0.1)).unwrap();
    assert!((euler.evaluate(0.1, None).unwrap()[0] - 0.9).abs() < 1e-15);
    assert!((heun.evaluate(0.1, None).unwrap()[0] - 0.905).abs() < 1e-15);
}

#[test]
fn test1_first_step() {
    let mut m = test1();
    m.problem.tf = 1.05;
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.05)).unwrap();
    let u = sol.evaluate(1.05, None).unwrap()[0];
    assert!((u - 1.05f64.sqrt()).abs() < 1e-8);
}

#[test]
fn tableaux_satisfy_their_order_conditions() {
    for tab in methods() {
        let report = verify_order_conditions(&tab);
        assert!(!report.conditions.is_empty());
        assert!(
            report.max_residual() < 1e-13,
            "{}: {:?}",
            tab.name,
            report.conditions
        );
        assert!(report.conditions.iter().all(|c| c.order <= tab.order));
    }
}

#[test]
fn interpolant_endpoints_match_the_step() {
    let p = lagged(1.0, 1.0, 3.0, |t| t.cos());
    for tab in methods() {
        let w0 = tab.weights_at(0.0);
        assert!(w0.iter().all(|w| w.abs() < 1e-15), "{}", tab.name);
        let w1: f64 = tab.weights_at(1.0).iter().sum();
        assert!((w1 - 1.0).abs() < 1e-14, "{}", tab.name);
        let sol = integrate(&p, &tab, &IntegrateOptions::fixed(0.1)).unwrap();
        let mut buf = [0.0];
        sol.steps()[0].eval(0.0, &mut buf);
        assert_eq!(buf[0], 1.0);
    }
}

#[test]
fn smooth_constant_delay_reaches_full_order() {
    // u' = -u(t - pi/2) with u = cos t is solved by cos t everywhere.
    let p = lagged(1.0, FRAC_PI_2, 6.0, |t| t.cos());
    let hs = [0.2, 0.1, 0.05, 0.025];
    for tab in methods() {
        let s = slope(&p, &tab, &hs, &|t| t.cos());
        assert!((s - tab.order as f64).abs() < 0.3, "{} slope {s}", tab.name);
    }
}

#[test]
fn delays_shorter_than_the_step() {
    // u' = -u(t - tau) has the solution e^{lt} with l e^{l tau} = -1. With tau
    // far below every h, the error constant does not drift with tau / h.
    let tau = 1e-4;
    let (mut lo, mut hi) = (-2.0f64, -1.0f64);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m * (m * tau).exp() + 1.0 > 0.0 {
            hi = m;
        } else {
            lo = m;
        }
    }
    let l = 0.5 * (lo + hi);
    let p = lagged(1.0, tau, 2.0, move |t| (l * t).exp());
    let hs = [0.2, 0.1, 0.05, 0.025];
    for tab in methods() {
        let s = slope(&p, &tab, &hs, &move |t| (l * t).exp());
        assert!((s - tab.order as f64).abs() < 0.3, "{} slope {s}", tab.name);
    }
}

#[test]
fn detection_restores_order_four_on_test1() {
    let m = test1();
    let exact = m.exact.clone().unwrap();
    let f = move |t: f64| exact(t)[0];
    let ns = [16usize, 32, 64, 128];
    let run = |detect: bool| {
        let pts: Vec<(f64, f64)> = ns
            .iter()
            .map(|&n| {
                let h = 1.0 / (n as f64 + 0.5);
                let mut opts = IntegrateOptions::fixed(h);
                if !detect {
                    opts = opts.without_detection();
                }
                let sol = integrate(&m.problem, &fcrk4(), &opts).unwrap();
                let mut err: f64 = 0.0;
                let mut buf = [0.0];
                for piece in sol.steps() {
                    for i in 0..=8 {
                        let t = piece.t_start + (piece.t_end - piece.t_start) * i as f64 / 8.0;
                        piece.eval(t, &mut buf);
                        err = err.max((buf[0] - f(t)).abs());
                    }
                }
                (h, err)
            })
            .collect();
        fit_slope(&pts).unwrap()
    };
    let with = run(true);
    let without = run(false);
    assert!((with - 4.0).abs() < 0.3, "with detection {with}");
    assert!((without - 2.0).abs() < 0.3, "without detection {without}");
}
