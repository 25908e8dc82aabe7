//! Built-in problems: classical test equations with closed-form solutions,
//! state-dependent and threshold-delay models from cell biology, and the
//! scalar examples used for dynamics studies.
//!
//! Every model is built from a flat parameter map. Keys not known to a model
//! are rejected, so the names below are a stable contract for config files.

mod biology;
mod classic;
mod scalar;
mod twostate;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::threshold::ThresholdSpec;
use crate::{DdeProblem, Error, Result};

pub use biology::{
    audit_amplification, g0_amplification, g0_cell_cycle, g0_steady_state, goodwin,
    goodwin_steady_state, hematopoiesis, hematopoiesis_state, operon, ForcingFn,
    HematopoiesisParams,
};
pub use classic::{test1, test2, winston, winston_candidates};
pub use scalar::{scalar_threshold, ScalarThresholdParams};
pub use twostate::{two_state_dependent, TwoStateParams};

/// Exact solution `t -> u(t)`.
pub type ExactFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Named real parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params(BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Params(BTreeMap::new())
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        Params(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    pub fn set(&mut self, key: impl Into<String>, value: f64) {
        self.0.insert(key.into(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// `self` with every entry of `overrides` applied; unknown keys are
    /// an error.
    pub fn merged(&self, overrides: &Params) -> Result<Params> {
        let mut out = self.clone();
        for (k, v) in overrides.iter() {
            if !self.0.contains_key(k) {
                return Err(Error::InvalidParameter {
                    name: k.to_string(),
                    reason: format!(
                        "not a parameter of this model (known: {})",
                        self.0.keys().cloned().collect::<Vec<_>>().join(", ")
                    ),
                });
            }
            out.0.insert(k.to_string(), v);
        }
        Ok(out)
    }

    pub(crate) fn req(&self, key: &str) -> Result<f64> {
        self.get(key).ok_or_else(|| Error::InvalidParameter {
            name: key.to_string(),
            reason: "missing".into(),
        })
    }
}

/// A ready-to-integrate problem plus what is known about it.
#[derive(Clone)]
pub struct Model {
    pub name: String,
    pub params: Params,
    /// Threshold delays are already augmented into the state.
    pub problem: DdeProblem,
    pub exact: Option<ExactFn>,
    /// Exact breaking points `(location, order)` inside the horizon.
    pub exact_breaking_points: Vec<(f64, i32)>,
    /// Threshold specs with the state component carrying each delay.
    pub thresholds: Vec<ThresholdSpec>,
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Model")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("problem", &self.problem)
            .field("exact", &self.exact.is_some())
            .field("exact_breaking_points", &self.exact_breaking_points)
            .finish()
    }
}

pub const MODEL_NAMES: &[&str] = &[
    "test1",
    "test2",
    "winston",
    "twostatedep",
    "threshold-scalar",
    "goodwin",
    "operon",
    "g0",
    "hematopoiesis",
];

/// Default parameters of a model.
pub fn default_params(model: &str) -> Result<Params> {
    Ok(match model {
        "test1" | "test2" | "winston" => Params::new(),
        "twostatedep" => twostate::preset("tori-a").expect("built-in preset"),
        "threshold-scalar" => scalar::preset("g-up-V-up").expect("built-in preset"),
        "goodwin" => biology::goodwin_defaults(),
        "operon" => biology::operon_defaults(),
        "g0" => biology::g0_defaults(),
        "hematopoiesis" => biology::hematopoiesis_defaults(),
        other => return Err(Error::UnknownModel(other.to_string())),
    })
}

/// Named parameter sets of a model.
pub fn preset_names(model: &str) -> &'static [&'static str] {
    match model {
        "twostatedep" => twostate::PRESETS,
        "threshold-scalar" => scalar::PRESETS,
        _ => &[],
    }
}

pub fn preset(model: &str, name: &str) -> Result<Params> {
    let found = match model {
        "twostatedep" => twostate::preset(name),
        "threshold-scalar" => scalar::preset(name),
        _ => None,
    };
    found.ok_or_else(|| Error::InvalidParameter {
        name: "preset".into(),
        reason: format!("model `{model}` has no preset `{name}`"),
    })
}

/// Builds a model from its name, an optional preset and overrides.
pub fn build_model(name: &str, preset_name: Option<&str>, overrides: &Params) -> Result<Model> {
    let base = match preset_name {
        Some(p) => preset(name, p)?,
        None => default_params(name)?,
    };
    let params = base.merged(overrides)?;
    match name {
        "test1" => Ok(test1()),
        "test2" => Ok(test2()),
        "winston" => Ok(winston()),
        "twostatedep" => two_state_dependent(&TwoStateParams::from_params(&params)?),
        "threshold-scalar" => scalar_threshold(&ScalarThresholdParams::from_params(&params)?),
        "goodwin" => goodwin(&params),
        "operon" => operon(&params),
        "g0" => g0_cell_cycle(&params),
        "hematopoiesis" => hematopoiesis(&params, None),
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// Hill function `(lo theta^n + hi u^n) / (theta^n + u^n)`; negative `u`
/// is treated as zero.
pub fn hill(lo: f64, hi: f64, theta: f64, n: f64, u: f64) -> f64 {
    let tn = theta.powf(n);
    let un = u.max(0.0).powf(n);
    (lo * tn + hi * un) / (tn + un)
}

/// Derivative of [`hill`] with respect to `u`.
pub fn hill_derivative(lo: f64, hi: f64, theta: f64, n: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    let tn = theta.powf(n);
    let un = u.powf(n);
    n * u.powf(n - 1.0) * tn * (hi - lo) / ((tn + un) * (tn + un))
}

pub(crate) fn check_hill_exponent(name: &str, n: f64) -> Result<()> {
    if !(n >= 1.0) {
        return Err(Error::InvalidParameter {
            name: name.to_string(),
            reason: format!("Hill exponent must be at least 1, got {n}"),
        });
    }
    Ok(())
}

pub(crate) fn check_positive(p: &Params, keys: &[&str]) -> Result<()> {
    for k in keys {
        let v = p.req(k)?;
        if !(v > 0.0) {
            return Err(Error::InvalidParameter {
                name: k.to_string(),
                reason: format!("must be positive, got {v}"),
            });
        }
    }
    Ok(())
}
