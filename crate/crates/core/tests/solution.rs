use std::sync::Arc;

use proptest::prelude::*;
use sdde_core::fcrk::{fcrk4, integrate, IntegrateOptions};
use sdde_core::models::{preset, scalar_threshold, test1, test2, ScalarThresholdParams};
use sdde_core::{
    delayed_argument, DdeProblem, DelaySpec, Error, HistoryFunction, RhsFn, RhsInput, Side,
};

/// Root of `w e^w = 1`, by bisection.
fn omega() -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m * m.exp() < 1.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    lo
}

fn constant_delay_problem(tau: f64) -> DdeProblem {
    let rhs: RhsFn = Arc::new(|inp: &RhsInput<'_>, out: &mut [f64]| {
        out[0] = -inp.delayed.get(0)[0];
    });
    DdeProblem::new(
        "lag",
        1,
        HistoryFunction::constant(vec![1.0], -tau, 0.0),
        10.0,
        rhs,
    )
    .with_delay(DelaySpec::Constant(tau))
}

#[test]
fn test1_matches_sqrt_before_the_first_breaking_point() {
    let m = test1();
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.01)).unwrap();
    let u = sol.evaluate(2.0, None).unwrap()[0];
    assert!((u - 2f64.sqrt()).abs() < 1e-8, "u(2) = {u}");
    // History is constant.
    assert_eq!(sol.evaluate(-0.3, None).unwrap(), vec![1.0]);
}

#[test]
fn test2_one_sided_values_at_the_initial_jump() {
    let m = test2();
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.01)).unwrap();
    let w = omega();
    let u = sol.evaluate(w, None).unwrap()[0];
    assert!((u - (-w).exp()).abs() < 1e-7, "u(W(1)) = {u}");
    assert_eq!(sol.evaluate(-1.0, Some(Side::Left)).unwrap(), vec![0.0]);
    assert_eq!(sol.evaluate(-1.0, Some(Side::Right)).unwrap(), vec![1.0]);
    assert!(matches!(
        sol.evaluate(0.37, Some(Side::Left)),
        Err(Error::Domain(_))
    ));
    assert!(matches!(
        sol.evaluate(1.5, None),
        Err(Error::OutOfRange { .. })
    ));
}

#[test]
fn deviating_argument_examples() {
    let p = constant_delay_problem(2.0);
    assert_eq!(delayed_argument(&p, 0, 5.0, &[0.0]).unwrap(), 3.0);

    let tau = Arc::new(|_: f64, u: &[f64]| u[0]);
    let mut clamped = constant_delay_problem(1.0);
    clamped.delays = vec![DelaySpec::ClampedStateDependent(tau.clone())];
    assert_eq!(delayed_argument(&clamped, 0, 0.0, &[-1.0]).unwrap(), 0.0);

    let mut plain = constant_delay_problem(1.0);
    plain.delays = vec![DelaySpec::StateDependent(tau)];
    assert!(matches!(
        delayed_argument(&plain, 0, 0.0, &[-1.0]),
        Err(Error::AdvanceDetected { delay: 0, .. })
    ));
}

#[test]
fn threshold_delays_have_monotone_arguments() {
    let q = preset("threshold-scalar", "g-up-V-up").unwrap();
    let p = ScalarThresholdParams::from_params(&q).unwrap();
    let mut m = scalar_threshold(&p).unwrap();
    m.problem.tf = 20.0;
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.02)).unwrap();
    let alphas: Vec<f64> = sol
        .mesh()
        .into_iter()
        .filter(|&t| t >= sol.t0())
        .map(|t| t - sol.evaluate(t, None).unwrap()[1])
        .collect();
    assert!(alphas.windows(2).all(|w| w[1] >= w[0] - 1e-12));
}

#[test]
fn breaking_point_orders_grow_by_one_along_parents() {
    for m in [test1(), test2()] {
        let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.05)).unwrap();
        let bps = &sol.breaking_points;
        let mut with_parent = 0;
        for b in bps {
            if let Some(par) = b.parent {
                let parent = &bps[par.index];
                assert_eq!(
                    b.order,
                    parent.order + 1,
                    "{}: {b:?} from {parent:?}",
                    m.name
                );
                assert!(parent.location < b.location);
                with_parent += 1;
            }
        }
        assert!(with_parent > 0, "{}", m.name);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dense_output_is_continuous_at_mesh_points(tau in 0.3f64..2.0, h in 0.02f64..0.2) {
        let mut p = constant_delay_problem(tau);
        p.tf = 4.0;
        let sol = integrate(&p, &fcrk4(), &IntegrateOptions::fixed(h)).unwrap();
        let steps = sol.steps();
        let mut left = [0.0];
        let mut right = [0.0];
        for w in steps.windows(2) {
            w[0].eval(w[0].t_end, &mut left);
            w[1].eval(w[1].t_start, &mut right);
            prop_assert!((left[0] - right[0]).abs() <= 1e-13 * (1.0 + left[0].abs()));
        }
    }
}
