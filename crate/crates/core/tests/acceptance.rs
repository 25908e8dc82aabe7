//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use sdde_core::analysis::{
    boundedness_guard, centroid, characteristic_roots, max_angular_gap, poincare_trace,
    threshold_steady_states, CharacteristicFunction, RootBox, ThresholdLinearization,
};
use sdde_core::convergence::{convergence_study, ConvergenceReport, ConvergenceSettings};
use sdde_core::fcrk::{fcrk4, integrate, lambda_step, method_by_name, IntegrateOptions};
use sdde_core::models::{
    preset, scalar_threshold, test1, test2, two_state_dependent, Model, ScalarThresholdParams,
    TwoStateParams,
};
use sdde_core::rng::Lcg64;
use sdde_core::threshold::{
    audit_threshold_residual, dummy_delay_problem, dummy_delay_threshold, initial_threshold_delay,
};
use sdde_core::{HistoryFunction, Tier};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn ns() -> Vec<usize> {
    (3..=10).map(|k| 1usize << k).collect()
}

fn study(model: &Model, method: &str, detection: bool, lambda: f64) -> ConvergenceReport {
    let s = ConvergenceSettings {
        detection,
        lambda,
        samples_per_step: 20,
    };
    convergence_study(model, method, &ns(), &s).expect("convergence study")
}

fn within(x: Option<f64>, target: f64, tol: f64) -> bool {
    x.is_some_and(|x| (x - target).abs() <= tol)
}

fn fmt_slope(x: Option<f64>) -> String {
    x.map_or("none".into(), |x| format!("{x:.3}"))
}

fn order_restoration() -> Outcome {
    let start = Instant::now();
    let m = test1();
    let mut ok = true;
    let mut parts = Vec::new();
    for (p, method) in ["fcrk1", "fcrk2", "fcrk3", "fcrk4"].iter().enumerate() {
        let r = study(&m, method, true, 0.5);
        ok &= within(r.err_slope, (p + 1) as f64, 0.3);
        parts.push(format!("{method} {}", fmt_slope(r.err_slope)));
    }
    let took = start.elapsed();
    ok &= took < Duration::from_secs(30);
    outcome(ok, format!("{} in {took:.2?}", parts.join(", ")))
}

fn order_reduction() -> Outcome {
    let m = test1();
    let mut ok = true;
    let mut parts = Vec::new();
    for method in ["fcrk3", "fcrk4"] {
        let r = study(&m, method, false, 0.5);
        ok &= within(r.err_slope, 2.0, 0.3);
        parts.push(format!("{method} {}", fmt_slope(r.err_slope)));
    }
    outcome(ok, parts.join(", "))
}

fn order_one_collapse() -> Outcome {
    let m = test2();
    let mut ok = true;
    let mut parts = Vec::new();
    for method in ["fcrk1", "fcrk2", "fcrk3", "fcrk4"] {
        let r = study(&m, method, false, 0.0);
        ok &= within(r.err_slope, 1.0, 0.3);
        parts.push(format!("{method} {}", fmt_slope(r.err_slope)));
    }
    outcome(ok, parts.join(", "))
}

/// Root of `w e^w = 1` by bisection.
fn omega_constant() -> f64 {
    let (mut lo, mut hi) = (0.5f64, 0.6f64);
    loop {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if m * m.exp() < 1.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

fn full_restoration() -> Outcome {
    let m = test2();
    let w = omega_constant();
    let mut ok = (w - 0.567_143_290_409_783_8).abs() < 1e-15;
    let mut parts = Vec::new();
    for (method, p, tier) in [
        ("fcrk2", 2.0, Tier::Quadratic),
        ("fcrk3", 3.0, Tier::Quadratic),
        ("fcrk4", 4.0, Tier::Secant),
    ] {
        let r = study(&m, method, true, 0.5);
        ok &= (r.xi - w).abs() < 1e-15;
        ok &= within(r.err_slope, p, 0.3) && within(r.bp_slope, p, 0.4);
        let finest = r
            .rows
            .last()
            .and_then(|row| row.bp_err)
            .unwrap_or(f64::INFINITY);
        ok &= finest < 1e-7;
        let (tab, _) = method_by_name(method).unwrap();
        let sol = integrate(
            &m.problem,
            &tab,
            &IntegrateOptions::fixed(lambda_step(0.0, w, 64, 0.5)),
        )
        .unwrap();
        let used = sol
            .breaking_points
            .iter()
            .min_by(|a, b| (a.location - w).abs().total_cmp(&(b.location - w).abs()))
            .map(|b| b.tier);
        ok &= used == Some(tier);
        parts.push(format!(
            "{method} err {} xi {} |xi-W(1)| {finest:.1e} via {}",
            fmt_slope(r.err_slope),
            fmt_slope(r.bp_slope),
            used.map_or("none", |t| t.as_str())
        ));
    }
    outcome(ok, parts.join(", "))
}

fn tier_study() -> Outcome {
    let m = test1();
    let mut ok = true;
    let mut parts = Vec::new();
    for (method, q) in [("fcrk4-q2", 2.0), ("fcrk4-q3", 3.0), ("fcrk4-q4", 4.0)] {
        let r = study(&m, method, true, 0.25);
        ok &= within(r.err_slope, 4.0, 0.3) && within(r.bp_slope, q, 0.4);
        parts.push(format!(
            "{method} err {} xi {}",
            fmt_slope(r.err_slope),
            fmt_slope(r.bp_slope)
        ));
    }
    outcome(ok, parts.join(", "))
}

fn threshold_audit() -> Outcome {
    let start = Instant::now();
    let q = preset("threshold-scalar", "g-up-V-up").unwrap();
    let p = ScalarThresholdParams::from_params(&q).unwrap();
    let m = scalar_threshold(&p).unwrap();
    let opts = IntegrateOptions::fixed(1e-2);
    let sol = integrate(&m.problem, &fcrk4(), &opts).unwrap();
    let times: Vec<f64> = (0..=500).map(|i| i as f64 * 0.1).collect();
    let res = audit_threshold_residual(&sol, &m.thresholds[0], 1, &times).unwrap();
    let smooth = res.iter().fold(0.0f64, |a, r| a.max(r.abs()));
    let mut ok = smooth <= 1e-10;

    let mut pq = p;
    pq.penalty = 1.0;
    let pm = scalar_threshold(&pq).unwrap();
    let tau0 = initial_threshold_delay(&p.spec(), &p.threshold_problem().history).unwrap();
    let problem = pm
        .problem
        .clone()
        .with_initial_value(vec![p.history, tau0 + 1e-3]);
    let mut short = problem;
    short.tf = 20.0;
    let psol = integrate(&short, &fcrk4(), &opts).unwrap();
    let marks: Vec<f64> = (0..=20).map(|i| i as f64).collect();
    let pres: Vec<f64> = audit_threshold_residual(&psol, &pm.thresholds[0], 1, &marks)
        .unwrap()
        .into_iter()
        .map(f64::abs)
        .collect();
    // Monotone until the residual reaches round-off.
    let monotone = pres
        .windows(2)
        .all(|w| w[1] <= w[0] || w[0].max(w[1]) < 1e-12);
    let first = pres[0];
    let last = pres[20];
    ok &= monotone && last < 1e-6 && first > 1e-4;
    let took = start.elapsed();
    ok &= took < Duration::from_secs(10);
    outcome(
        ok,
        format!(
            "max residual {smooth:.1e}; perturbed {first:.1e} -> {last:.1e} at t=20, monotone {monotone}, {took:.2?}"
        ),
    )
}

fn random_threshold_params(rng: &mut Lcg64) -> ScalarThresholdParams {
    let mut q = preset("threshold-scalar", "g-up-V-up").unwrap();
    for (k, lo, hi) in [
        ("beta", 0.5, 3.0),
        ("mu", 0.0, 0.5),
        ("gamma", 0.3, 2.0),
        ("a", 0.5, 2.0),
        ("g_minus", 0.2, 1.0),
        ("g_plus", 0.5, 2.0),
        ("theta_g", 0.5, 1.5),
        ("n", 1.0, 10.0),
        ("v_minus", 0.1, 1.0),
        ("v_plus", 1.0, 3.0),
        ("theta_v", 0.5, 1.5),
        ("m", 1.0, 10.0),
    ] {
        q.set(k, rng.uniform(lo, hi));
    }
    ScalarThresholdParams::from_params(&q).unwrap()
}

fn characteristic_factorization() -> Outcome {
    let bx = RootBox::new(-5.0, 2.0, 20.0).unwrap();
    let mut rng = Lcg64::new(0x5eed_0007);
    let mut ok = true;
    let mut worst_match = 0.0f64;
    let mut worst_residual = 0.0f64;
    let mut total = 0;
    for _ in 0..20 {
        let p = random_threshold_params(&mut rng);
        let states = threshold_steady_states(&p);
        if states.is_empty() {
            ok = false;
            continue;
        }
        let u = states[rng.next_u64() as usize % states.len()];
        let l = ThresholdLinearization::from_scalar(&p, u);
        let thres = CharacteristicFunction::ThresholdScalar(l);
        let diff = CharacteristicFunction::DifferentiatedThreshold(l);
        let a = characteristic_roots(&thres, &bx, None);
        let b = characteristic_roots(&diff, &bx, None);
        for (cf, s) in [(&thres, &a), (&diff, &b)] {
            for r in &s.roots {
                let res = cf.evaluate(r.lambda).norm() / (1.0 + r.lambda.norm());
                worst_residual = worst_residual.max(res);
            }
        }
        let zero = b.roots.iter().filter(|r| r.lambda.norm() <= 1e-8).count();
        ok &= zero == 1;
        let rest: Vec<Complex64> = b
            .roots
            .iter()
            .map(|r| r.lambda)
            .filter(|z| z.norm() > 1e-8)
            .collect();
        ok &= rest.len() == a.roots.len();
        let dist = |z: Complex64, set: &mut dyn Iterator<Item = Complex64>| {
            set.map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min)
        };
        for z in &rest {
            worst_match = worst_match.max(dist(*z, &mut a.roots.iter().map(|r| r.lambda)));
        }
        for r in &a.roots {
            worst_match = worst_match.max(dist(r.lambda, &mut rest.iter().copied()));
        }
        total += a.roots.len();
    }
    ok &= worst_match <= 1e-8 && worst_residual <= 1e-10;
    outcome(
        ok,
        format!("{total} roots over 20 sets, max mismatch {worst_match:.1e}, max scaled |Delta| {worst_residual:.1e}"),
    )
}

fn steady_state_multiplicity() -> Outcome {
    let base = preset("threshold-scalar", "g-up-V-up").unwrap();
    let mut ok = true;
    let mut five = Vec::new();
    let mut most = 0;
    for i in 0..=100 {
        let gamma = 0.5 + i as f64 * 0.01;
        let mut q = base.clone();
        q.set("gamma", gamma);
        let p = ScalarThresholdParams::from_params(&q).unwrap();
        let roots = threshold_steady_states(&p);
        let upper = p.beta * p.g_plus / p.gamma;
        ok &= roots.iter().all(|&u| (0.0..=upper).contains(&u));
        ok &= roots
            .iter()
            .all(|&u| p.steady_state_residual(u).abs() <= 1e-10);
        ok &= roots.windows(2).all(|w| w[1] - w[0] > 1e-8);
        most = most.max(roots.len());
        if roots.len() == 5 {
            five.push(gamma);
        }
    }
    ok &= !five.is_empty();
    let range = match (five.first(), five.last()) {
        (Some(a), Some(b)) => format!("gamma in [{a:.2}, {b:.2}]"),
        _ => "never".into(),
    };
    outcome(ok, format!("up to {most} steady states; five for {range}"))
}

fn boundedness() -> Outcome {
    let q = preset("twostatedep", "tori-a").unwrap();
    let p = TwoStateParams::from_params(&q).unwrap();
    let hi_formula = 1.3 * (4.44 + 3.0) / 4.75;
    let mut ok = (p.upper_bound() - hi_formula).abs() < 1e-15 && (hi_formula - 2.0362).abs() < 1e-4;
    let mut rng = Lcg64::new(0x5eed_0009);
    let (mut lo_seen, mut hi_seen) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut failures = 0;
    for _ in 0..50 {
        let c = rng.uniform(-0.8, 1.5);
        let amp = rng.uniform(0.0, 0.45);
        let w = rng.uniform(0.2, 3.0);
        let ph = rng.uniform(0.0, std::f64::consts::TAU);
        let phi = move |t: f64| c + amp * (w * t + ph).sin();
        let bound = match boundedness_guard(&p, &phi, 2000) {
            Ok(b) => b,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let mut m = two_state_dependent(&p).unwrap();
        m.problem.history = HistoryFunction::smooth(
            1,
            -bound.tau0,
            0.0,
            Arc::new(move |t, o: &mut [f64]| o[0] = phi(t)),
        );
        m.problem.tf = 200.0;
        let problem = m.problem.with_guard(bound.guard());
        match integrate(&problem, &fcrk4(), &IntegrateOptions::fixed(0.01)) {
            Ok(sol) => {
                let mut buf = [0.0];
                for piece in sol.steps() {
                    for k in 0..=4 {
                        let t = piece.t_start + (piece.t_end - piece.t_start) * k as f64 / 4.0;
                        piece.eval(t, &mut buf);
                        lo_seen = lo_seen.min(buf[0]);
                        hi_seen = hi_seen.max(buf[0]);
                    }
                }
            }
            Err(_) => failures += 1,
        }
    }
    ok &= failures == 0 && lo_seen > -1.3 && hi_seen < hi_formula;
    outcome(
        ok,
        format!("50 histories, {failures} failures, range [{lo_seen:.4}, {hi_seen:.4}] inside (-1.3, {hi_formula:.4})"),
    )
}

fn quasi_periodic_section() -> Outcome {
    let q = preset("twostatedep", "tori-a").unwrap();
    let p = TwoStateParams::from_params(&q).unwrap();
    let mut m = two_state_dependent(&p).unwrap();
    m.problem.tf = 1200.0;
    let sol = integrate(&m.problem, &fcrk4(), &IntegrateOptions::fixed(0.01)).unwrap();
    let trace = poincare_trace(&sol, p.a1, p.a2, 200.0).unwrap();
    let pts: Vec<(f64, f64)> = trace.iter().map(|s| (s.x, s.y)).collect();
    let nearest = pts
        .iter()
        .map(|(x, y)| x.hypot(*y))
        .fold(f64::INFINITY, f64::min);
    let gap = max_angular_gap(&pts, centroid(&pts));
    let ok = pts.len() >= 200 && nearest > 0.01 && gap < 0.2;
    outcome(
        ok,
        format!(
            "{} crossings, min distance {nearest:.3}, max angular gap {gap:.3} rad",
            pts.len()
        ),
    )
}

fn dummy_delay_equivalence() -> Outcome {
    let q = preset("threshold-scalar", "g-up-V-up").unwrap();
    let p = ScalarThresholdParams::from_params(&q).unwrap();
    let tau_max = p.a / p.v_min();
    let n = 512;
    let mut base = p.threshold_problem();
    base.tf = 1.0;
    let mut aug = scalar_threshold(&p).unwrap().problem;
    aug.tf = 1.0;
    let opts = IntegrateOptions::fixed(0.01);
    let sd = integrate(
        &dummy_delay_problem(&base, n, tau_max).unwrap(),
        &fcrk4(),
        &opts,
    )
    .unwrap();
    let sa = integrate(&aug, &fcrk4(), &opts).unwrap();
    let tau0 = sa.evaluate(0.0, None).unwrap()[1];
    let mut worst = 0.0f64;
    let mut vel = vec![0.0; n + 1];
    for i in 0..=200 {
        let t = tau0 * i as f64 / 200.0;
        for (j, v) in vel.iter_mut().enumerate() {
            let s = t - j as f64 * tau_max / n as f64;
            *v = p.v(sd.evaluate(s, None).unwrap()[0]);
        }
        let td = dummy_delay_threshold(&vel, p.a, tau_max).unwrap();
        let ta = sa.evaluate(t, None).unwrap()[1];
        worst = worst.max((td - ta).abs());
    }
    outcome(
        worst <= 1e-6,
        format!("sup |tau_aug - tau_dummy| on [0, {tau0:.4}] = {worst:.1e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("order restoration on test1", order_restoration),
        (
            "order reduction on test1 without detection",
            order_reduction,
        ),
        (
            "order-one collapse on test2 with the breaking point on the mesh",
            order_one_collapse,
        ),
        ("full restoration on test2", full_restoration),
        ("FCRK4 breaking-point tiers on test1", tier_study),
        ("threshold condition audit", threshold_audit),
        ("characteristic factorization", characteristic_factorization),
        ("steady-state multiplicity", steady_state_multiplicity),
        ("boundedness of the two-delay equation", boundedness),
        ("quasi-periodic Poincare section", quasi_periodic_section),
        ("dummy-delay equivalence", dummy_delay_equivalence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {}", i + 1, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
