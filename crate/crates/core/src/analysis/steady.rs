use crate::models::{
    g0_steady_state, goodwin_steady_state, Params, ScalarThresholdParams, TwoStateParams,
};
use crate::{Error, Result};

/// A steady state with the delay values it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub state: Vec<f64>,
    pub delays: Vec<f64>,
}

/// Samples used to bracket sign changes of `h(u)`.
const SCAN_POINTS: usize = 20_000;

/// Steady states `u*` of the scalar threshold model: the zeros of
/// `h(u) = beta e^{-mu tau(u)} g(u) - gamma u` on `[0, beta g_max / gamma]`,
/// with `tau(u) = a / V(u)`. Sorted increasingly, each refined to `1e-12`.
pub fn threshold_steady_states(p: &ScalarThresholdParams) -> Vec<f64> {
    let h = |u: f64| p.steady_state_residual(u);
    let dh = |u: f64| {
        let tau = p.tau(u);
        let dtau = -p.a * p.dv(u) / (p.v(u) * p.v(u));
        p.beta * (-p.mu * tau).exp() * (p.dg(u) - p.mu * dtau * p.g(u)) - p.gamma
    };
    // Every zero lies below beta g_max / gamma; the margin keeps one that
    // sits on the bound inside the scan.
    let hi = p.beta * p.g_max() / p.gamma * (1.0 + 1e-6) + 1e-12;
    let mut roots = Vec::new();
    let mut u0 = 0.0;
    let mut h0 = h(u0);
    if h0 == 0.0 {
        roots.push(0.0);
    }
    for i in 1..=SCAN_POINTS {
        let u1 = hi * i as f64 / SCAN_POINTS as f64;
        let h1 = h(u1);
        if h1 == 0.0 {
            roots.push(u1);
        } else if h0 != 0.0 && (h0 < 0.0) != (h1 < 0.0) {
            roots.push(refine(&h, &dh, u0, u1));
        }
        u0 = u1;
        h0 = h1;
    }
    roots
}

/// Bisection to a `1e-3`-relative bracket, then safeguarded Newton.
fn refine(h: &dyn Fn(f64) -> f64, dh: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let neg_lo = h(lo) < 0.0;
    let step = |lo: &mut f64, hi: &mut f64, m: f64| {
        if (h(m) < 0.0) == neg_lo {
            *lo = m;
        } else {
            *hi = m;
        }
    };
    while hi - lo > 1e-3 * hi.abs().max(1e-3) {
        let m = 0.5 * (lo + hi);
        step(&mut lo, &mut hi, m);
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..100 {
        let d = dh(u);
        let next = u - h(u) / d;
        let next = if d != 0.0 && next > lo && next < hi {
            next
        } else {
            0.5 * (lo + hi)
        };
        step(&mut lo, &mut hi, next);
        let moved = (next - u).abs();
        u = next;
        if moved <= 1e-15 * u.abs().max(1.0) || hi - lo <= 1e-12 * u.abs().max(1.0) {
            break;
        }
    }
    u
}

/// Steady states of a scalar model family from the catalog.
pub fn steady_states(model: &str, params: &Params) -> Result<Vec<SteadyState>> {
    match model {
        "threshold-scalar" => {
            let p = ScalarThresholdParams::from_params(params)?;
            Ok(threshold_steady_states(&p)
                .into_iter()
                .map(|u| SteadyState {
                    state: vec![u],
                    delays: vec![p.tau(u)],
                })
                .collect())
        }
        "twostatedep" => {
            let p = TwoStateParams::from_params(params)?;
            // -(gamma + kappa1 + kappa2) u* = 0
            if p.gamma + p.kappa1 + p.kappa2 == 0.0 {
                return Err(Error::Domain(
                    "every constant is a steady state when gamma + kappa1 + kappa2 = 0".into(),
                ));
            }
            Ok(vec![SteadyState {
                state: vec![0.0],
                delays: vec![p.a1, p.a2],
            }])
        }
        "goodwin" => Ok(vec![SteadyState {
            state: goodwin_steady_state(params)?.to_vec(),
            delays: vec![params.req("tau_m")?, params.req("tau_i")?],
        }]),
        "g0" => {
            let tau = params.req("tau")?;
            let mut out = vec![SteadyState {
                state: vec![0.0],
                delays: vec![tau],
            }];
            if let Some(q) = g0_steady_state(params)? {
                out.push(SteadyState {
                    state: vec![q],
                    delays: vec![tau],
                });
            }
            Ok(out)
        }
        other => Err(Error::InvalidParameter {
            name: "model".into(),
            reason: format!("no steady-state solver for `{other}`"),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::preset;

    #[test]
    fn constant_rates_give_closed_form() {
        let mut q = preset("threshold-scalar", "g-const-V-up").unwrap();
        for (k, v) in [("v_minus", 1.0), ("v_plus", 1.0)] {
            q.set(k, v);
        }
        let p = ScalarThresholdParams::from_params(&q).unwrap();
        let roots = threshold_steady_states(&p);
        let expect = 1.4 * (-0.2f64).exp() / 0.8;
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn two_state_rest_point_is_zero() {
        let q = preset("twostatedep", "tori-a").unwrap();
        let s = steady_states("twostatedep", &q).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].state, vec![0.0]);
    }
}
