use std::sync::Arc;

use super::{Model, Params};
use crate::{DdeProblem, DelayFn, DelaySpec, Error, HistoryFunction, Result, RhsFn, RhsInput};

pub(super) const PRESETS: &[&str] = &["advex", "tori-a", "tori-b"];

pub(super) fn preset(name: &str) -> Option<Params> {
    let tori = |kappa1: f64| {
        Params::from_pairs(&[
            ("gamma", 4.75),
            ("kappa1", kappa1),
            ("kappa2", 3.0),
            ("a1", 1.3),
            ("a2", 6.0),
            ("c1", 1.0),
            ("c2", 1.0),
            ("clamped", 0.0),
            ("history", 0.1),
            ("tf", 500.0),
            ("max_delay", 0.0),
        ])
    };
    match name {
        "advex" => Some(Params::from_pairs(&[
            ("gamma", 1.0),
            ("kappa1", 2.0),
            ("kappa2", 2.0),
            ("a1", 1.0),
            ("a2", 2.0),
            ("c1", 0.5),
            ("c2", 0.4),
            ("clamped", 1.0),
            ("history", 0.5),
            ("tf", 100.0),
            ("max_delay", 8.0),
        ])),
        "tori-a" => Some(tori(4.44)),
        "tori-b" => Some(tori(6.93)),
        _ => None,
    }
}

/// Parameters of `u' = -gamma u - kappa1 u(t - a1 - c1 u) - kappa2 u(t - a2 - c2 u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateParams {
    pub gamma: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub a1: f64,
    pub a2: f64,
    pub c1: f64,
    pub c2: f64,
    /// Replace each deviating argument by `min(t, t - tau_j)`.
    pub clamped: bool,
    /// Constant history value.
    pub history: f64,
    pub tf: f64,
    /// Bound on the delays; zero selects the a-priori bound that holds when
    /// `gamma > kappa2`.
    pub max_delay: f64,
}

impl TwoStateParams {
    pub fn from_params(p: &Params) -> Result<Self> {
        Ok(TwoStateParams {
            gamma: p.req("gamma")?,
            kappa1: p.req("kappa1")?,
            kappa2: p.req("kappa2")?,
            a1: p.req("a1")?,
            a2: p.req("a2")?,
            c1: p.req("c1")?,
            c2: p.req("c2")?,
            clamped: p.req("clamped")? != 0.0,
            history: p.req("history")?,
            tf: p.req("tf")?,
            max_delay: p.req("max_delay")?,
        })
    }

    /// Upper end of the invariant interval `a1 (kappa1 + kappa2) / (gamma c1)`.
    pub fn upper_bound(&self) -> f64 {
        self.a1 * (self.kappa1 + self.kappa2) / (self.gamma * self.c1)
    }

    /// `max_j { a_j + c_j * upper_bound }`.
    pub fn delay_bound(&self) -> f64 {
        let u = self.upper_bound();
        (self.a1 + self.c1 * u).max(self.a2 + self.c2 * u)
    }

    fn effective_max_delay(&self) -> Result<f64> {
        if self.max_delay > 0.0 {
            return Ok(self.max_delay);
        }
        if self.gamma > self.kappa2 && self.c1 > 0.0 {
            return Ok(self.delay_bound());
        }
        Err(Error::InvalidParameter {
            name: "max_delay".into(),
            reason: "no a-priori delay bound (gamma <= kappa2); set max_delay explicitly".into(),
        })
    }
}

/// Scalar equation with two linearly state-dependent delays.
pub fn two_state_dependent(p: &TwoStateParams) -> Result<Model> {
    let max_delay = p.effective_max_delay()?;
    let t0 = 0.0;
    let history = HistoryFunction::constant(vec![p.history], t0 - max_delay, t0);
    let TwoStateParams {
        gamma,
        kappa1,
        kappa2,
        ..
    } = *p;
    let rhs: RhsFn = Arc::new(move |inp: &RhsInput<'_>, out: &mut [f64]| {
        out[0] =
            -gamma * inp.u[0] - kappa1 * inp.delayed.get(0)[0] - kappa2 * inp.delayed.get(1)[0];
    });
    let (a1, c1, a2, c2) = (p.a1, p.c1, p.a2, p.c2);
    let tau1: DelayFn = Arc::new(move |_, u: &[f64]| a1 + c1 * u[0]);
    let tau2: DelayFn = Arc::new(move |_, u: &[f64]| a2 + c2 * u[0]);
    let wrap = |f: DelayFn| {
        if p.clamped {
            DelaySpec::ClampedStateDependent(f)
        } else {
            DelaySpec::StateDependent(f)
        }
    };
    let problem = DdeProblem::new("twostatedep", 1, history, p.tf, rhs)
        .with_delay_flagged(wrap(tau1), false)
        .with_delay_flagged(wrap(tau2), false)
        .with_max_delay(max_delay);
    let mut params = Params::new();
    for (k, v) in [
        ("gamma", p.gamma),
        ("kappa1", p.kappa1),
        ("kappa2", p.kappa2),
        ("a1", p.a1),
        ("a2", p.a2),
        ("c1", p.c1),
        ("c2", p.c2),
        ("clamped", if p.clamped { 1.0 } else { 0.0 }),
        ("history", p.history),
        ("tf", p.tf),
        ("max_delay", p.max_delay),
    ] {
        params.set(k, v);
    }
    Ok(Model {
        name: "twostatedep".into(),
        params,
        problem,
        exact: None,
        exact_breaking_points: Vec::new(),
        thresholds: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delayed_argument;

    #[test]
    fn delays_at_zero_state_are_the_offsets() {
        let p = TwoStateParams::from_params(&preset("tori-a").unwrap()).unwrap();
        let m = two_state_dependent(&p).unwrap();
        assert_eq!(
            delayed_argument(&m.problem, 0, 10.0, &[0.0]).unwrap(),
            10.0 - 1.3
        );
        assert_eq!(delayed_argument(&m.problem, 1, 10.0, &[0.0]).unwrap(), 4.0);
    }

    #[test]
    fn tori_bound_matches_formula() {
        let p = TwoStateParams::from_params(&preset("tori-a").unwrap()).unwrap();
        assert!((p.upper_bound() - 1.3 * 7.44 / 4.75).abs() < 1e-15);
        assert!((p.delay_bound() - (6.0 + 1.3 * 7.44 / 4.75)).abs() < 1e-14);
    }
}
