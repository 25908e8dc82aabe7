use std::sync::Arc;

use super::{check_hill_exponent, check_positive, hill, hill_derivative, Model, Params};
use crate::threshold::{augment_problem, ThresholdSpec};
use crate::{DdeProblem, DelaySpec, HistoryFunction, Result, RhsFn, RhsInput};

pub(super) const PRESETS: &[&str] = &["g-up-V-up", "g-const-V-up"];

pub(super) fn preset(name: &str) -> Option<Params> {
    let common = [
        ("beta", 1.4),
        ("mu", 0.2),
        ("gamma", 0.8),
        ("a", 1.0),
        ("theta_g", 1.0),
        ("v_minus", 0.1),
        ("v_plus", 2.0),
        ("tf", 50.0),
        ("penalty", 0.0),
    ];
    let extra: &[(&str, f64)] = match name {
        "g-up-V-up" => &[
            ("g_minus", 0.5),
            ("g_plus", 1.0),
            ("n", 20.0),
            ("theta_v", 0.5),
            ("m", 20.0),
            ("history", 1.5),
        ],
        "g-const-V-up" => &[
            ("g_minus", 1.0),
            ("g_plus", 1.0),
            ("n", 1.0),
            ("theta_v", 1.0),
            ("m", 2.0),
            ("history", 1.0),
        ],
        _ => return None,
    };
    let mut p = Params::from_pairs(&common);
    for (k, v) in extra {
        p.set(*k, *v);
    }
    Some(p)
}

/// Parameters of `u' = beta e^{-mu tau} V(u) / V(u(t - tau)) g(u(t - tau)) - gamma u`
/// with `int_{t - tau}^t V(u(s)) ds = a` and Hill functions `g`, `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarThresholdParams {
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub a: f64,
    pub g_minus: f64,
    pub g_plus: f64,
    pub theta_g: f64,
    pub n: f64,
    pub v_minus: f64,
    pub v_plus: f64,
    pub theta_v: f64,
    pub m: f64,
    /// Constant history value.
    pub history: f64,
    pub tf: f64,
    /// Penalty weight on the integral condition; zero disables it.
    pub penalty: f64,
}

impl ScalarThresholdParams {
    pub fn from_params(p: &Params) -> Result<Self> {
        check_positive(
            p,
            &[
                "beta", "gamma", "a", "g_minus", "g_plus", "theta_g", "v_minus", "v_plus",
                "theta_v",
            ],
        )?;
        let s = ScalarThresholdParams {
            beta: p.req("beta")?,
            mu: p.req("mu")?,
            gamma: p.req("gamma")?,
            a: p.req("a")?,
            g_minus: p.req("g_minus")?,
            g_plus: p.req("g_plus")?,
            theta_g: p.req("theta_g")?,
            n: p.req("n")?,
            v_minus: p.req("v_minus")?,
            v_plus: p.req("v_plus")?,
            theta_v: p.req("theta_v")?,
            m: p.req("m")?,
            history: p.req("history")?,
            tf: p.req("tf")?,
            penalty: p.req("penalty")?,
        };
        check_hill_exponent("n", s.n)?;
        check_hill_exponent("m", s.m)?;
        Ok(s)
    }

    pub fn to_params(&self) -> Params {
        Params::from_pairs(&[
            ("beta", self.beta),
            ("mu", self.mu),
            ("gamma", self.gamma),
            ("a", self.a),
            ("g_minus", self.g_minus),
            ("g_plus", self.g_plus),
            ("theta_g", self.theta_g),
            ("n", self.n),
            ("v_minus", self.v_minus),
            ("v_plus", self.v_plus),
            ("theta_v", self.theta_v),
            ("m", self.m),
            ("history", self.history),
            ("tf", self.tf),
            ("penalty", self.penalty),
        ])
    }

    pub fn g(&self, u: f64) -> f64 {
        hill(self.g_minus, self.g_plus, self.theta_g, self.n, u)
    }

    pub fn dg(&self, u: f64) -> f64 {
        hill_derivative(self.g_minus, self.g_plus, self.theta_g, self.n, u)
    }

    pub fn v(&self, u: f64) -> f64 {
        hill(self.v_minus, self.v_plus, self.theta_v, self.m, u)
    }

    pub fn dv(&self, u: f64) -> f64 {
        hill_derivative(self.v_minus, self.v_plus, self.theta_v, self.m, u)
    }

    pub fn v_min(&self) -> f64 {
        self.v_minus.min(self.v_plus)
    }

    pub fn v_max(&self) -> f64 {
        self.v_minus.max(self.v_plus)
    }

    pub fn g_max(&self) -> f64 {
        self.g_minus.max(self.g_plus)
    }

    /// Steady-state delay `a / V(u)`.
    pub fn tau(&self, u: f64) -> f64 {
        self.a / self.v(u)
    }

    /// Steady states are the zeros of `beta e^{-mu tau(u)} g(u) - gamma u`.
    pub fn steady_state_residual(&self, u: f64) -> f64 {
        self.beta * (-self.mu * self.tau(u)).exp() * self.g(u) - self.gamma * u
    }

    pub fn spec(&self) -> ThresholdSpec {
        let p = *self;
        ThresholdSpec::new(
            Arc::new(move |_, u: &[f64]| p.v(u[0])),
            self.a,
            self.v_min(),
            self.v_max(),
        )
    }

    /// The problem in threshold form, before augmentation.
    pub fn threshold_problem(&self) -> DdeProblem {
        let p = *self;
        let start = -(p.a / p.v_min()) - 1.0;
        let history = HistoryFunction::constant(vec![p.history], start, 0.0);
        let rhs: RhsFn = Arc::new(move |inp: &RhsInput<'_>, out: &mut [f64]| {
            let tau = inp.taus[0];
            let ud = inp.delayed.get(0)[0];
            let u = inp.u[0];
            out[0] = p.beta * (-p.mu * tau).exp() * p.v(u) / p.v(ud) * p.g(ud) - p.gamma * u;
        });
        DdeProblem::new("threshold-scalar", 1, history, p.tf, rhs)
            .with_delay(DelaySpec::Threshold(self.spec()))
    }
}

/// Scalar threshold-delay model, augmented with `tau` as a second component.
pub fn scalar_threshold(p: &ScalarThresholdParams) -> Result<Model> {
    let penalty = (p.penalty != 0.0).then_some(p.penalty);
    let aug = augment_problem(&p.threshold_problem(), penalty)?;
    Ok(Model {
        name: "threshold-scalar".into(),
        params: p.to_params(),
        problem: aug.problem,
        exact: None,
        exact_breaking_points: Vec::new(),
        thresholds: aug.thresholds.into_iter().map(|(_, s)| s).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delay_bounds_from_velocity_bounds() {
        let p = ScalarThresholdParams::from_params(&preset("g-up-V-up").unwrap()).unwrap();
        assert_eq!(p.a / p.v_max(), 0.5);
        assert!((p.a / p.v_min() - 10.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_hill_exponent() {
        let mut q = preset("g-const-V-up").unwrap();
        q.set("m", 0.5);
        assert!(ScalarThresholdParams::from_params(&q).is_err());
    }

    #[test]
    fn presets_round_trip() {
        for name in PRESETS {
            let q = preset(name).unwrap();
            let p = ScalarThresholdParams::from_params(&q).unwrap();
            assert_eq!(p.to_params(), q);
        }
    }
}
