use std::sync::Arc;

use proptest::prelude::*;
use sdde_core::fcrk::{fcrk4, integrate, IntegrateOptions};
use sdde_core::lambert::lambert_w0;
use sdde_core::models::{
    audit_amplification, build_model, default_params, g0_cell_cycle, g0_steady_state, goodwin,
    hematopoiesis, hematopoiesis_state as ix, hill, operon, test1, test2, winston,
    winston_candidates, ForcingFn, HematopoiesisParams, MODEL_NAMES,
};
use sdde_core::{DdeProblem, DelaySpec, Error, HistoryFunction, RhsFn, RhsInput};

const W1: f64 = 0.567_143_290_409_783_8;

#[test]
fn test1_end_value() {
    let m = test1();
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.01)).unwrap();
    let u = sol.evaluate(5.0, None).unwrap()[0];
    let exact = 1.75 + (1.0 - 0.5f64.sqrt()) * 5f64.sqrt();
    assert!((exact - 2.404_929_147).abs() < 1e-9);
    assert!((u - exact).abs() < 1e-8, "{u}");
}

#[test]
fn test2_values_and_next_breaking_point() {
    let m = test2();
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.01)).unwrap();
    let u = sol.evaluate(0.25, None).unwrap()[0];
    assert!((u - (-0.25f64).exp()).abs() < 1e-9);
    // The argument reaches 0 again just beyond the end of the interval.
    let next = lambert_w0(1.0 + W1.exp()).unwrap();
    assert!(next > 1.0 && next < 1.02, "{next}");
}

#[test]
fn lambert_examples() {
    assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
    assert!((lambert_w0(1.0).unwrap() - W1).abs() < 1e-16);
    assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
    assert_eq!(lambert_w0(-(-1.0f64).exp()).unwrap(), -1.0);
    assert!(matches!(lambert_w0(-0.5), Err(Error::Domain(_))));
}

/// The exact solutions satisfy their equations, with derivatives written out
/// by hand piece by piece.
#[test]
fn exact_solutions_solve_their_equations() {
    let m = test1();
    let u = m.exact.clone().unwrap();
    let s2 = 2f64.sqrt();
    let du = |t: f64| {
        if t <= 2.0 {
            0.5 / t.sqrt()
        } else {
            0.25 + (1.0 - 1.0 / s2) * 0.5 / t.sqrt()
        }
    };
    for (lo, hi) in [(1.0, 2.0), (2.0, 5.0)] {
        for i in 1..100 {
            let t = lo + (hi - lo) * i as f64 / 100.0;
            let alpha = u(t)[0] - s2 + 1.0;
            let r = du(t) - u(alpha)[0] / (2.0 * t.sqrt());
            assert!(r.abs() <= 1e-10, "test1 at {t}: {r}");
        }
    }

    let m = test2();
    let u = m.exact.clone().unwrap();
    let du = |t: f64| {
        if t <= W1 {
            -(-t).exp()
        } else {
            -(-t).exp() * (1.0 + W1.exp())
        }
    };
    for (lo, hi) in [(0.0, W1), (W1, 1.0)] {
        for i in 1..100 {
            let t = lo + (hi - lo) * i as f64 / 100.0;
            let v = u(t)[0];
            let r = du(t) + v + u(t - 1.0 - v)[0];
            assert!(r.abs() <= 1e-10, "test2 at {t}: {r}");
        }
    }
}

fn retreating(clamped: bool) -> DdeProblem {
    // tau = 1 + u turns negative once u < -1.
    let tau = Arc::new(|_: f64, u: &[f64]| 1.0 + u[0]);
    let spec = if clamped {
        DelaySpec::ClampedStateDependent(tau)
    } else {
        DelaySpec::StateDependent(tau)
    };
    let rhs: RhsFn = Arc::new(|inp: &RhsInput<'_>, out: &mut [f64]| {
        let d = inp.delayed.get(0)[0];
        out[0] = -1.0 - 0.1 * d * d;
    });
    DdeProblem::new(
        "retreat",
        1,
        HistoryFunction::constant(vec![0.0], -2.0, 0.0),
        3.0,
        rhs,
    )
    .with_delay_flagged(spec, false)
    .with_max_delay(2.0)
}

#[test]
fn clamping_turns_advances_into_current_values() {
    let opts = IntegrateOptions::fixed(0.01);
    let sol = integrate(&retreating(true), &fcrk4(), &opts).unwrap();
    assert!(sol.evaluate(3.0, None).unwrap()[0] < -2.0);
    assert!(matches!(
        integrate(&retreating(false), &fcrk4(), &opts),
        Err(Error::AdvanceDetected { delay: 0, .. })
    ));
}

#[test]
fn winston_candidates_both_solve_the_problem() {
    let m = winston();
    let hist = &m.problem.history;
    let [a, b] = winston_candidates();
    let derivs: [&dyn Fn(f64) -> f64; 2] = [&|_| 1.0, &|t: f64| 1.0 - 1.5 * t.sqrt()];
    for (u, du) in [(&a, derivs[0]), (&b, derivs[1])] {
        for i in 1..=100 {
            let t = 0.25 * i as f64 / 100.0;
            let alpha = t - u(t)[0].abs();
            let r = du(t) + hist.value(alpha).unwrap()[0];
            // The history has a cube root at -1, so an ulp in alpha costs
            // about 1.5 * eps^(1/3).
            assert!(r.abs() < 2e-5, "t = {t}: {r}");
        }
    }
    // The argument starts on the history kink; which solution the integrator
    // follows depends on h, but it must follow one of them.
    for h in [0.01, 0.005, 0.002, 0.001] {
        let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(h)).unwrap();
        let dist = |u: &sdde_core::models::ExactFn| {
            (1..=50)
                .map(|i| {
                    let t = 0.25 * i as f64 / 50.0;
                    (sol.evaluate(t, None).unwrap()[0] - u(t)[0]).abs()
                })
                .fold(0.0, f64::max)
        };
        let (da, db) = (dist(&a), dist(&b));
        assert!(da.min(db) < h, "h = {h}: {da} {db}");
    }
}

fn rk4(f: impl Fn(&[f64; 3]) -> [f64; 3], y0: [f64; 3], h: f64, n: usize) -> [f64; 3] {
    let add =
        |y: &[f64; 3], k: &[f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    let mut y = y0;
    for _ in 0..n {
        let k1 = f(&y);
        let k2 = f(&add(&y, &k1, h / 2.0));
        let k3 = f(&add(&y, &k2, h / 2.0));
        let k4 = f(&add(&y, &k3, h));
        for c in 0..3 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
    }
    y
}

#[test]
fn goodwin_without_delays_is_an_ode() {
    let mut p = default_params("goodwin").unwrap();
    p.set("mu", 0.0);
    p.set("tau_m", 0.0);
    p.set("tau_i", 0.0);
    p.set("tf", 20.0);
    let m = goodwin(&p).unwrap();
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.01)).unwrap();
    let f = |y: &[f64; 3]| {
        let rep = 1.0 / (1.0 + y[2].powi(10));
        [rep - 0.3 * y[0], y[0] - 0.3 * y[1], y[1] - 0.3 * y[2]]
    };
    let want = rk4(f, [0.5; 3], 0.001, 20_000);
    let got = sol.evaluate(20.0, None).unwrap();
    for c in 0..3 {
        assert!((got[c] - want[c]).abs() < 1e-8, "{got:?} vs {want:?}");
    }
}

#[test]
fn operon_with_constant_velocities_is_goodwin() {
    let mut op = default_params("operon").unwrap();
    for k in ["vm_lo", "vm_hi", "vi_lo", "vi_hi"] {
        op.set(k, 1.0);
    }
    op.set("tf", 60.0);
    let mut gw = default_params("goodwin").unwrap();
    gw.set("tf", 60.0);
    let a = operon(&op).unwrap();
    assert_eq!(a.problem.dim, 5);
    let b = goodwin(&gw).unwrap();
    let opts = IntegrateOptions::fixed(0.01);
    let sa = integrate(&a.problem, &fcrk4(), &opts).unwrap();
    let sb = integrate(&b.problem, &fcrk4(), &opts).unwrap();
    for t in (0..=60).map(f64::from) {
        let (x, y) = (sa.evaluate(t, None).unwrap(), sb.evaluate(t, None).unwrap());
        for c in 0..3 {
            assert!((x[c] - y[c]).abs() < 1e-8, "t = {t}: {x:?} vs {y:?}");
        }
        assert!((x[3] - 2.0).abs() < 1e-12 && (x[4] - 2.0).abs() < 1e-12);
    }
}

#[test]
fn g0_steady_state_is_an_equilibrium() {
    let mut p = default_params("g0").unwrap();
    let q = g0_steady_state(&p).unwrap().unwrap();
    p.set("history", q);
    p.set("tf", 30.0);
    let m = g0_cell_cycle(&p).unwrap();
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.05)).unwrap();
    assert!((sol.evaluate(30.0, None).unwrap()[0] - q).abs() < 1e-12);
    // Amplification below one has no positive steady state.
    p.set("gamma", 1.0);
    assert_eq!(g0_steady_state(&p).unwrap(), None);
}

#[test]
fn hematopoiesis_with_constant_forcing() {
    let params = default_params("hematopoiesis").unwrap();
    let hp = HematopoiesisParams::from_params(&params).unwrap();
    let m = hematopoiesis(&params, None).unwrap();
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.02)).unwrap();
    let tau = hp.a / hp.velocity(hp.g);
    let times: Vec<f64> = (0..=50).map(f64::from).collect();
    for &t in &times {
        let u = sol.evaluate(t, None).unwrap();
        assert!((u[ix::TAU_NM] - tau).abs() < 1e-12);
        assert!(u[ix::Q] > 0.0 && u[ix::N] > 0.0);
    }
    let g = hp.g;
    let forcing: ForcingFn = Arc::new(move |_| g);
    let res = audit_amplification(&sol, &hp, &forcing, &times).unwrap();
    assert!(res.iter().all(|r| r.abs() < 1e-10), "{res:?}");
}

#[test]
fn hematopoiesis_with_varying_forcing_keeps_the_amplification() {
    let params = default_params("hematopoiesis").unwrap();
    let hp = HematopoiesisParams::from_params(&params).unwrap();
    let forcing: ForcingFn = Arc::new(|t: f64| 1.0 + 0.5 * (0.3 * t).sin());
    let m = hematopoiesis(&params, Some(forcing.clone())).unwrap();
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.02)).unwrap();
    let times: Vec<f64> = (0..=50).map(f64::from).collect();
    let res = audit_amplification(&sol, &hp, &forcing, &times).unwrap();
    assert!(res.iter().all(|r| r.abs() < 1e-7), "{res:?}");
}

#[test]
fn every_catalog_model_builds_and_runs_briefly() {
    for name in MODEL_NAMES {
        let mut m = build_model(name, None, &Default::default()).unwrap();
        m.problem.tf = m.problem.tf.min(m.problem.t0() + 1.0);
        let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.01));
        assert!(sol.is_ok(), "{name}: {sol:?}");
    }
    assert!(matches!(
        build_model("nope", None, &Default::default()),
        Err(Error::UnknownModel(_))
    ));
}

proptest! {
    #[test]
    fn lambert_inverts_w_exp_w(x in -0.3678f64..1e6) {
        let w = lambert_w0(x).unwrap();
        prop_assert!(w >= -1.0);
        prop_assert!((w * w.exp() - x).abs() <= 1e-13 * (1.0 + x.abs()));
    }

    #[test]
    fn hill_stays_between_its_levels(lo in 0.0f64..3.0, hi in 0.0f64..3.0, theta in 0.1f64..3.0, n in 1.0f64..20.0, u in -1.0f64..10.0) {
        let v = hill(lo, hi, theta, n, u);
        prop_assert!(v >= lo.min(hi) - 1e-15 && v <= lo.max(hi) + 1e-15);
    }
}
