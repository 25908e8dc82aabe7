//! Flat `key = value` run configuration.
//!
//! One entry per line, `#` starts a comment. Model parameters are written
//! `model.<name> = <value>`; everything else is a run setting. Later entries
//! override earlier ones, and `--set` entries from the command line come
//! last.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use sdde_core::fcrk::METHOD_NAMES;
use sdde_core::models::{Params, MODEL_NAMES};
use sha2::{Digest, Sha256};

/// Where an entry came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    CommandLine,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::CommandLine => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Option<Origin>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.origin, &self.key) {
            (Some(o), Some(k)) => write!(f, "{o}, key `{k}`: {}", self.message),
            (Some(o), None) => write!(f, "{o}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn err(origin: Option<Origin>, key: Option<&str>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        origin,
        key: key.map(str::to_string),
        message: message.into(),
    }
}

/// Run settings other than model parameters.
const SETTINGS: &[&str] = &[
    "model",
    "preset",
    "method",
    "methods",
    "detection",
    "h",
    "n",
    "ns",
    "lambda",
    "seed",
    "tf",
    "samples",
    "output",
    "breakpoints",
    "audit",
    "audit.step",
    "transient",
    "poincare.a1",
    "poincare.a2",
    "sweep.param",
    "sweep.lo",
    "sweep.hi",
    "sweep.steps",
    "box.re_min",
    "box.re_max",
    "box.im_max",
    "roots.count",
    "char.form",
    "hopf.tol",
];

/// Raw entries, last one wins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RawConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.insert_entry(line, Origin::Line(i + 1))?;
        }
        Ok(cfg)
    }

    /// Applies a `key=value` override.
    pub fn set(&mut self, entry: &str) -> Result<(), ConfigError> {
        self.insert_entry(entry, Origin::CommandLine)
    }

    fn insert_entry(&mut self, entry: &str, origin: Origin) -> Result<(), ConfigError> {
        let (k, v) = entry.split_once('=').ok_or_else(|| {
            err(
                Some(origin),
                None,
                format!("expected key = value, got `{entry}`"),
            )
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(err(Some(origin), None, "empty key"));
        }
        let known =
            SETTINGS.contains(&k) || k.strip_prefix("model.").is_some_and(|p| !p.is_empty());
        if !known {
            return Err(err(Some(origin), Some(k), "unknown setting"));
        }
        self.entries.insert(k.to_string(), (v.to_string(), origin));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn origin(&self, key: &str) -> Option<Origin> {
        self.entries.get(key).map(|(_, o)| *o)
    }

    fn bad(&self, key: &str, message: impl Into<String>) -> ConfigError {
        err(self.origin(key), Some(key), message)
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| self.bad(key, format!("`{v}` is not a number")))
            })
            .transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| self.bad(key, format!("`{v}` is not a non-negative integer")))
            })
            .transpose()
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.get(key)
            .map(|v| {
                let parsed = match v.strip_prefix("0x") {
                    Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16),
                    None => v.replace('_', "").parse(),
                };
                parsed.map_err(|_| self.bad(key, format!("`{v}` is not an unsigned integer")))
            })
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        self.get(key)
            .map(|v| match v {
                "on" | "true" | "yes" | "1" => Ok(true),
                "off" | "false" | "no" | "0" => Ok(false),
                _ => Err(self.bad(key, format!("`{v}` is not on/off"))),
            })
            .transpose()
    }

    pub fn list(&self, key: &str) -> Option<Vec<&str>> {
        self.get(key).map(|v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .collect()
        })
    }

    /// `model.*` entries as parameter overrides.
    pub fn model_overrides(&self) -> Result<Params, ConfigError> {
        let mut p = Params::new();
        for (k, (v, _)) in &self.entries {
            if let Some(name) = k.strip_prefix("model.") {
                let x = v
                    .parse::<f64>()
                    .map_err(|_| self.bad(k, format!("`{v}` is not a number")))?;
                p.set(name, x);
            }
        }
        Ok(p)
    }

    /// Canonical text: sorted `key = value` lines.
    pub fn canonical(&self) -> String {
        self.entries
            .iter()
            .map(|(k, (v, _))| format!("{k} = {v}\n"))
            .collect()
    }

    /// First 16 hex digits of the SHA-256 of [`RawConfig::canonical`].
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// How `lambda` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaMode {
    Fixed(f64),
    /// Uniform in `[0, 1)` from the seeded generator, one draw per run.
    Random {
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepChoice {
    Fixed(f64),
    /// `h = (xi - t0) / (n + lambda)` with `xi` the first exact breaking point.
    Placed {
        n: usize,
        lambda: LambdaMode,
    },
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub model: String,
    pub preset: Option<String>,
    pub overrides: Params,
    pub methods: Vec<String>,
    pub detection: bool,
    pub step: StepChoice,
    pub ns: Vec<usize>,
    pub lambda: LambdaMode,
    pub tf: Option<f64>,
    pub samples: usize,
    pub output: Option<PathBuf>,
    pub breakpoints: Option<PathBuf>,
    pub audit: Option<PathBuf>,
    pub audit_step: f64,
}

const DEFAULT_NS: &[usize] = &[8, 16, 32, 64, 128, 256, 512, 1024];

impl RunConfig {
    pub fn from_raw(raw: RawConfig) -> Result<Self, ConfigError> {
        let model = raw
            .get("model")
            .ok_or_else(|| err(None, Some("model"), "missing"))?
            .to_string();
        if !MODEL_NAMES.contains(&model.as_str()) {
            return Err(raw.bad(
                "model",
                format!(
                    "unknown model `{model}`; available: {}",
                    MODEL_NAMES.join(", ")
                ),
            ));
        }
        let methods: Vec<String> = match (raw.list("methods"), raw.get("method")) {
            (Some(list), _) => list.into_iter().map(str::to_string).collect(),
            (None, Some(m)) => vec![m.to_string()],
            (None, None) => vec!["fcrk4".to_string()],
        };
        if methods.is_empty() {
            return Err(raw.bad("methods", "empty list"));
        }
        for m in &methods {
            if !METHOD_NAMES.contains(&m.as_str()) {
                let key = if raw.get("methods").is_some() {
                    "methods"
                } else {
                    "method"
                };
                return Err(raw.bad(
                    key,
                    format!(
                        "unknown method `{m}`; available: {}",
                        METHOD_NAMES.join(", ")
                    ),
                ));
            }
        }
        let lambda = match raw.get("lambda") {
            Some("random") => LambdaMode::Random {
                seed: raw.u64("seed")?.unwrap_or(1),
            },
            _ => {
                let l = raw.f64("lambda")?.unwrap_or(0.5);
                if !(0.0..1.0).contains(&l) {
                    return Err(raw.bad("lambda", format!("must lie in [0, 1), got {l}")));
                }
                LambdaMode::Fixed(l)
            }
        };
        let step = match (raw.f64("h")?, raw.usize("n")?) {
            (Some(_), Some(_)) => return Err(raw.bad("h", "give either h or n, not both")),
            (Some(h), None) => {
                if !(h > 0.0 && h.is_finite()) {
                    return Err(raw.bad("h", format!("must be positive, got {h}")));
                }
                StepChoice::Fixed(h)
            }
            (None, Some(n)) => {
                if n == 0 {
                    return Err(raw.bad("n", "must be at least 1"));
                }
                StepChoice::Placed { n, lambda }
            }
            (None, None) => StepChoice::Fixed(0.01),
        };
        let ns = match raw.list("ns") {
            Some(list) => list
                .iter()
                .map(|s| match s.parse::<usize>() {
                    Ok(n) if n >= 1 => Ok(n),
                    _ => Err(raw.bad("ns", format!("`{s}` is not a positive integer"))),
                })
                .collect::<Result<Vec<_>, _>>()?,
            None => DEFAULT_NS.to_vec(),
        };
        if ns.is_empty() {
            return Err(raw.bad("ns", "empty list"));
        }
        let tf = raw.f64("tf")?;
        if let Some(t) = tf {
            if !t.is_finite() {
                return Err(raw.bad("tf", "must be finite"));
            }
        }
        let samples = raw.usize("samples")?.unwrap_or(20);
        if samples == 0 {
            return Err(raw.bad("samples", "must be at least 1"));
        }
        let audit_step = raw.f64("audit.step")?.unwrap_or(0.1);
        if !(audit_step > 0.0) {
            return Err(raw.bad("audit.step", "must be positive"));
        }
        Ok(RunConfig {
            model,
            preset: raw.get("preset").map(str::to_string),
            overrides: raw.model_overrides()?,
            methods,
            detection: raw.flag("detection")?.unwrap_or(true),
            step,
            ns,
            lambda,
            tf,
            samples,
            output: raw.get("output").map(PathBuf::from),
            breakpoints: raw.get("breakpoints").map(PathBuf::from),
            audit: raw.get("audit").map(PathBuf::from),
            audit_step,
            raw,
        })
    }

    pub fn method(&self) -> &str {
        &self.methods[0]
    }

    pub fn hash(&self) -> String {
        self.raw.hash()
    }
}

/// Config text that reproduces `params` exactly.
pub fn params_to_config(model: &str, preset: Option<&str>, params: &Params) -> String {
    let mut out = format!("model = {model}\n");
    if let Some(p) = preset {
        out.push_str(&format!("preset = {p}\n"));
    }
    for (k, v) in params.iter() {
        out.push_str(&format!("model.{k} = {v:?}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_overrides() {
        let mut raw =
            RawConfig::parse("model = test1 # trailing\n\n# full line\nh = 0.1\n").unwrap();
        raw.set("h=0.05").unwrap();
        let cfg = RunConfig::from_raw(raw).unwrap();
        assert_eq!(cfg.step, StepChoice::Fixed(0.05));
        assert_eq!(cfg.method(), "fcrk4");
    }

    #[test]
    fn errors_carry_line_and_key() {
        let e = RawConfig::parse("model = test1\nbogus = 3\n").unwrap_err();
        assert_eq!(e.origin, Some(Origin::Line(2)));
        assert_eq!(e.key.as_deref(), Some("bogus"));
        let raw = RawConfig::parse("model = test1\n\nh = fast\n").unwrap();
        let e = RunConfig::from_raw(raw).unwrap_err();
        assert_eq!(e.to_string(), "line 3, key `h`: `fast` is not a number");
    }

    #[test]
    fn hash_ignores_order_and_comments() {
        let a = RawConfig::parse("model = test1\nh = 0.1\n").unwrap();
        let b = RawConfig::parse("# x\nh=0.1\nmodel=test1\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
    }
}
