use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sdde_core::analysis::{
    characteristic_roots, hopf_scan, poincare_trace, steady_states, CharacteristicFunction,
    HopfPoint, RootBox, SteadyState, ThresholdLinearization,
};
use sdde_core::breakpoints::{DetectionOptions, TierChoice};
use sdde_core::convergence::{
    convergence_study, fit_slope, reference_breaking_point, ConvergenceSettings, SATURATION,
};
use sdde_core::fcrk::{integrate, lambda_step, method_by_name, IntegrateOptions};
use sdde_core::models::{
    build_model, default_params, preset, Model, Params, ScalarThresholdParams, TwoStateParams,
};
use sdde_core::rng::Lcg64;
use sdde_core::threshold::audit_threshold_residual;
use sdde_core::{DenseSolution, Error as CoreError, Tier};
use serde::Serialize;

use crate::config::{ConfigError, LambdaMode, RawConfig, RunConfig, StepChoice};
use crate::output::{emit, num, opt, Csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Converge,
    CharRoots,
    SteadyStates,
    Poincare,
    Audit,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Converge => "converge",
            Command::CharRoots => "char-roots",
            Command::SteadyStates => "steady-states",
            Command::Poincare => "poincare",
            Command::Audit => "audit",
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// The request makes no sense for this model.
    Unsupported(String),
    Solver(CoreError),
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for usage and configuration problems, 2 for solver failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Unsupported(_) | CliError::Io { .. } => 1,
            CliError::Solver(CoreError::UnknownModel(_) | CoreError::InvalidParameter { .. }) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Unsupported(m) => write!(f, "unsupported: {m}"),
            CliError::Solver(CoreError::UnknownModel(m)) => write!(
                f,
                "unknown model `{m}`; available: {}",
                sdde_core::models::MODEL_NAMES.join(", ")
            ),
            CliError::Solver(e) => write!(f, "solver error: {e}"),
            CliError::Io { path, source } => write!(f, "cannot write {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Solver(e)
    }
}

type CliResult<T> = Result<T, CliError>;

fn write_to(path: Option<&Path>, text: &str) -> CliResult<()> {
    emit(path, text).map_err(|source| CliError::Io {
        path: path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf),
        source,
    })
}

/// `out.csv` -> `out.<suffix>`.
fn sidecar(output: Option<&Path>, suffix: &str) -> Option<PathBuf> {
    output.map(|p| p.with_extension(suffix))
}

/// Parses a config and runs `cmd`.
pub fn run(cmd: Command, raw: RawConfig) -> CliResult<()> {
    let cfg = RunConfig::from_raw(raw)?;
    match cmd {
        Command::Simulate => simulate(&cfg),
        Command::Converge => converge(&cfg),
        Command::CharRoots => char_roots(&cfg),
        Command::SteadyStates => steady(&cfg),
        Command::Poincare => poincare(&cfg),
        Command::Audit => audit(&cfg),
    }
}

fn header(cmd: Command, cfg: &RunConfig, extra: &[String]) -> Vec<String> {
    let mut first = format!("sdde {} model={}", cmd.name(), cfg.model);
    if let Some(p) = &cfg.preset {
        first.push_str(&format!(" preset={p}"));
    }
    first.push_str(&format!(" config={}", cfg.hash()));
    let mut out = vec![first];
    out.extend(extra.iter().cloned());
    out.push(format!(
        "config: {}",
        cfg.raw.canonical().trim_end().replace('\n', "; ")
    ));
    out
}

fn model_params(cfg: &RunConfig) -> CliResult<Params> {
    let base = match &cfg.preset {
        Some(p) => preset(&cfg.model, p)?,
        None => default_params(&cfg.model)?,
    };
    Ok(base.merged(&cfg.overrides)?)
}

fn build(cfg: &RunConfig) -> CliResult<Model> {
    let mut m = build_model(&cfg.model, cfg.preset.as_deref(), &cfg.overrides)?;
    if let Some(tf) = cfg.tf {
        m.problem.tf = tf;
    }
    Ok(m)
}

fn draw_lambda(mode: LambdaMode, rng: &mut Option<Lcg64>) -> f64 {
    match mode {
        LambdaMode::Fixed(l) => l,
        LambdaMode::Random { seed } => rng.get_or_insert_with(|| Lcg64::new(seed)).next_f64(),
    }
}

fn detection(cfg: &RunConfig, forced: Option<Tier>) -> Option<DetectionOptions> {
    cfg.detection.then(|| DetectionOptions {
        tier: forced.map_or(TierChoice::Auto, TierChoice::Fixed),
        ..DetectionOptions::default()
    })
}

/// Step size for a single run, plus a description for the header.
fn step_size(cfg: &RunConfig, model: &Model) -> CliResult<(f64, String)> {
    match cfg.step {
        StepChoice::Fixed(h) => Ok((h, format!("h={}", num(h)))),
        StepChoice::Placed { n, lambda } => {
            let xi = reference_breaking_point(model).ok_or_else(|| {
                CliError::Unsupported(format!(
                    "model `{}` has no known breaking point to place the mesh on; set h",
                    model.name
                ))
            })?;
            let l = draw_lambda(lambda, &mut None);
            let h = lambda_step(model.problem.t0(), xi, n, l);
            let mut desc = format!("h={} n={n} lambda={}", num(h), num(l));
            if let LambdaMode::Random { seed } = lambda {
                desc.push_str(&format!(" seed={seed}"));
            }
            Ok((h, desc))
        }
    }
}

struct Run {
    model: Model,
    sol: DenseSolution,
    step_desc: String,
}

fn solve(cfg: &RunConfig) -> CliResult<Run> {
    let model = build(cfg)?;
    let (tab, forced) = method_by_name(cfg.method())?;
    let (h, step_desc) = step_size(cfg, &model)?;
    let opts = IntegrateOptions {
        detection: detection(cfg, forced),
        ..IntegrateOptions::fixed(h)
    };
    let sol = integrate(&model.problem, &tab, &opts)?;
    Ok(Run {
        model,
        sol,
        step_desc,
    })
}

/// Column names: `u1..` for the model state, `tau1..` for threshold delays.
fn state_columns(model: &Model) -> Vec<String> {
    let taus: Vec<usize> = model
        .thresholds
        .iter()
        .filter_map(|s| s.delay_component)
        .collect();
    let (mut u, mut k) = (0, 0);
    (0..model.problem.dim)
        .map(|i| {
            if taus.contains(&i) {
                k += 1;
                format!("tau{k}")
            } else {
                u += 1;
                format!("u{u}")
            }
        })
        .collect()
}

fn sample_times(sol: &DenseSolution, per_step: usize) -> Vec<f64> {
    let mut ts = vec![sol.t0()];
    for p in sol.steps() {
        for i in 1..per_step {
            ts.push(p.t_start + (p.t_end - p.t_start) * i as f64 / per_step as f64);
        }
        ts.push(p.t_end);
    }
    ts
}

/// Residual of every threshold condition at `times`; one column per delay.
fn threshold_audit(run: &Run, times: &[f64]) -> CliResult<Vec<Vec<f64>>> {
    run.model
        .thresholds
        .iter()
        .map(|spec| {
            let k = spec.delay_component.ok_or_else(|| {
                CliError::Unsupported("threshold delay is not carried in the state".into())
            })?;
            Ok(audit_threshold_residual(&run.sol, spec, k, times)?)
        })
        .collect()
}

fn audit_times(cfg: &RunConfig, sol: &DenseSolution) -> Vec<f64> {
    let (t0, tf) = (sol.t0(), sol.t_end());
    let n = ((tf - t0) / cfg.audit_step + 1e-9).floor() as usize;
    (0..=n).map(|i| t0 + cfg.audit_step * i as f64).collect()
}

fn audit_csv(cmd: Command, cfg: &RunConfig, run: &Run, extra: &[String]) -> CliResult<(Csv, f64)> {
    let times = audit_times(cfg, &run.sol);
    let residuals = threshold_audit(run, &times)?;
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=residuals.len()).map(|k| format!("residual{k}")));
    let mut csv = Csv::new(&header(cmd, cfg, extra), &cols);
    let mut max: f64 = 0.0;
    for (i, t) in times.iter().enumerate() {
        let mut row = vec![num(*t)];
        for r in &residuals {
            max = max.max(r[i].abs());
            row.push(num(r[i]));
        }
        csv.row(&row);
    }
    csv.comment(&format!("max |residual| = {}", num(max)));
    Ok((csv, max))
}

#[derive(Serialize)]
struct BreakingPointRecord {
    location: f64,
    order: i32,
    tier: &'static str,
    delay: Option<usize>,
    parent: Option<usize>,
    /// Distance to the nearest exact breaking point, when those are known.
    exact_error: Option<f64>,
}

#[derive(Serialize)]
struct AuditSummary {
    times: usize,
    max_abs_residual: f64,
}

#[derive(Serialize)]
struct SimulationReport<'a> {
    model: &'a str,
    method: &'a str,
    detection: bool,
    config_hash: String,
    step: &'a str,
    t0: f64,
    tf: f64,
    steps: usize,
    breaking_points: Vec<BreakingPointRecord>,
    threshold_audit: Option<AuditSummary>,
}

fn simulate(cfg: &RunConfig) -> CliResult<()> {
    let run = solve(cfg)?;
    let sol = &run.sol;
    let extra = vec![
        format!(
            "method={} detection={} {}",
            cfg.method(),
            if cfg.detection { "on" } else { "off" },
            run.step_desc
        ),
        "units: t and tau* in model time, u* in model state units".to_string(),
    ];
    let mut cols = vec!["t".to_string()];
    cols.extend(state_columns(&run.model));
    let mut csv = Csv::new(&header(Command::Simulate, cfg, &extra), &cols);
    let mut buf = vec![0.0; sol.dim()];
    let per_step = cfg.raw.usize("samples")?.unwrap_or(4).max(1);
    for t in sample_times(sol, per_step) {
        sol.eval_into(t, &mut buf);
        let mut row = vec![num(t)];
        row.extend(buf.iter().map(|&x| num(x)));
        csv.row(&row);
    }
    write_to(cfg.output.as_deref(), &csv.into_string())?;

    let audit = if run.model.thresholds.is_empty() {
        None
    } else {
        let (acsv, max) = audit_csv(Command::Simulate, cfg, &run, &extra)?;
        let path = cfg
            .audit
            .clone()
            .or_else(|| sidecar(cfg.output.as_deref(), "audit.csv"));
        if let Some(p) = &path {
            write_to(Some(p), &acsv.into_string())?;
        }
        Some(AuditSummary {
            times: audit_times(cfg, sol).len(),
            max_abs_residual: max,
        })
    };

    let exact: Vec<f64> = run
        .model
        .exact_breaking_points
        .iter()
        .map(|b| b.0)
        .collect();
    let records = sol
        .breaking_points
        .iter()
        .map(|b| BreakingPointRecord {
            location: b.location,
            order: b.order,
            tier: b.tier.as_str(),
            delay: b.parent.map(|p| p.delay),
            parent: b.parent.map(|p| p.index),
            exact_error: exact
                .iter()
                .map(|x| (x - b.location).abs())
                .min_by(f64::total_cmp),
        })
        .collect();
    let report = SimulationReport {
        model: &cfg.model,
        method: cfg.method(),
        detection: cfg.detection,
        config_hash: cfg.hash(),
        step: &run.step_desc,
        t0: sol.t0(),
        tf: sol.t_end(),
        steps: sol.steps().len(),
        breaking_points: records,
        threshold_audit: audit,
    };
    let path = cfg
        .breakpoints
        .clone()
        .or_else(|| sidecar(cfg.output.as_deref(), "bp.json"));
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(&report).expect("report serialises");
        write_to(Some(&p), &(text + "\n"))?;
    }
    Ok(())
}

fn audit(cfg: &RunConfig) -> CliResult<()> {
    let run = solve(cfg)?;
    if run.model.thresholds.is_empty() {
        return Err(CliError::Unsupported(format!(
            "model `{}` has no threshold delay to audit",
            cfg.model
        )));
    }
    let extra = vec![format!("method={} {}", cfg.method(), run.step_desc)];
    let (csv, _) = audit_csv(Command::Audit, cfg, &run, &extra)?;
    write_to(cfg.output.as_deref(), &csv.into_string())
}

struct StudyRow {
    lambda: f64,
    n: usize,
    h: f64,
    err: f64,
    bp_err: Option<f64>,
}

fn converge(cfg: &RunConfig) -> CliResult<()> {
    let model = build(cfg)?;
    if model.exact.is_none() {
        return Err(CliError::Unsupported(format!(
            "model `{}` has no exact solution to converge to",
            cfg.model
        )));
    }
    // One draw per (method, N), in output order, so results do not depend
    // on scheduling.
    let mut rng = None;
    let jobs: Vec<(usize, usize, f64)> = cfg
        .methods
        .iter()
        .enumerate()
        .flat_map(|(mi, _)| cfg.ns.iter().map(move |&n| (mi, n)))
        .map(|(mi, n)| (mi, n, draw_lambda(cfg.lambda, &mut rng)))
        .collect();
    let results: Vec<CliResult<StudyRow>> = jobs
        .par_iter()
        .map(|&(mi, n, lambda)| {
            let settings = ConvergenceSettings {
                detection: cfg.detection,
                lambda,
                samples_per_step: cfg.samples,
            };
            let rep = convergence_study(&model, &cfg.methods[mi], &[n], &settings)?;
            let r = rep.rows[0];
            Ok(StudyRow {
                lambda,
                n,
                h: r.h,
                err: r.err,
                bp_err: r.bp_err,
            })
        })
        .collect();
    let rows = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let mut extra = vec![format!(
        "detection={} samples={}",
        if cfg.detection { "on" } else { "off" },
        cfg.samples
    )];
    match cfg.lambda {
        LambdaMode::Fixed(l) => extra.push(format!("lambda={}", num(l))),
        LambdaMode::Random { seed } => {
            extra.push(format!("lambda=random generator=lcg64 seed={seed}"))
        }
    }
    extra.push("units: h and errors in model time/state units".into());
    let cols: Vec<String> = [
        "method", "n", "lambda", "h", "err", "slope", "bp_err", "bp_slope",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut csv = Csv::new(&header(Command::Converge, cfg, &extra), &cols);
    let per = cfg.ns.len();
    let mut fits = Vec::new();
    for (mi, method) in cfg.methods.iter().enumerate() {
        let block = &rows[mi * per..(mi + 1) * per];
        for (i, r) in block.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| &block[j]);
            let slope = prev.and_then(|p| fit_slope(&[(p.h, p.err), (r.h, r.err)]));
            let bp_slope = prev.and_then(|p| match (p.bp_err, r.bp_err) {
                (Some(a), Some(b)) => fit_slope(&[(p.h, a), (r.h, b)]),
                _ => None,
            });
            csv.row(&[
                method.clone(),
                r.n.to_string(),
                num(r.lambda),
                num(r.h),
                num(r.err),
                opt(slope),
                opt(r.bp_err),
                opt(bp_slope),
            ]);
        }
        let err_pts: Vec<_> = block
            .iter()
            .filter(|r| r.err >= SATURATION)
            .map(|r| (r.h, r.err))
            .collect();
        let bp_pts: Vec<_> = block
            .iter()
            .filter_map(|r| r.bp_err.filter(|&e| e >= SATURATION).map(|e| (r.h, e)))
            .collect();
        fits.push(format!(
            "fit method={method} err_slope={} bp_slope={}",
            opt(fit_slope(&err_pts)),
            opt(fit_slope(&bp_pts))
        ));
    }
    for f in &fits {
        csv.comment(f);
    }
    write_to(cfg.output.as_deref(), &csv.into_string())
}

/// Steady states of `params` with their characteristic functions.
fn linearise(
    model: &str,
    params: &Params,
    form: &str,
) -> CliResult<Vec<(SteadyState, Option<CharacteristicFunction>)>> {
    let states = steady_states(model, params)?;
    match model {
        "threshold-scalar" => {
            let p = ScalarThresholdParams::from_params(params)?;
            states
                .into_iter()
                .map(|s| {
                    let lin = ThresholdLinearization::from_scalar(&p, s.state[0]);
                    let cf = match form {
                        "threshold" => CharacteristicFunction::ThresholdScalar(lin),
                        "differentiated" => CharacteristicFunction::DifferentiatedThreshold(lin),
                        other => {
                            return Err(CliError::Unsupported(format!(
                                "char.form `{other}`; use threshold or differentiated"
                            )))
                        }
                    };
                    Ok((s, Some(cf)))
                })
                .collect()
        }
        "twostatedep" => {
            let p = TwoStateParams::from_params(params)?;
            // The delays are frozen at the rest point u = 0.
            let cf = CharacteristicFunction::discrete_matrix(
                1,
                vec![-p.gamma],
                vec![vec![-p.kappa1], vec![-p.kappa2]],
                vec![p.a1, p.a2],
            )?;
            Ok(states.into_iter().map(|s| (s, Some(cf.clone()))).collect())
        }
        _ => Ok(states.into_iter().map(|s| (s, None)).collect()),
    }
}

struct Sweep {
    name: Option<String>,
    values: Vec<f64>,
}

fn sweep(raw: &RawConfig) -> CliResult<Sweep> {
    let Some(name) = raw.get("sweep.param") else {
        return Ok(Sweep {
            name: None,
            values: vec![f64::NAN],
        });
    };
    let need = |k: &str| {
        raw.f64(k)?.ok_or_else(|| {
            CliError::Config(ConfigError {
                origin: None,
                key: Some(k.to_string()),
                message: "required with sweep.param".into(),
            })
        })
    };
    let (lo, hi) = (need("sweep.lo")?, need("sweep.hi")?);
    let steps = raw.usize("sweep.steps")?.unwrap_or(20).max(1);
    Ok(Sweep {
        name: Some(name.to_string()),
        values: (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .collect(),
    })
}

fn params_at(base: &Params, sweep: &Sweep, value: f64) -> CliResult<Params> {
    match &sweep.name {
        Some(k) => Ok(base.merged(&Params::from_pairs(&[(k.as_str(), value)]))?),
        None => Ok(base.clone()),
    }
}

fn root_box(raw: &RawConfig) -> CliResult<RootBox> {
    Ok(RootBox::new(
        raw.f64("box.re_min")?.unwrap_or(-3.0),
        raw.f64("box.re_max")?.unwrap_or(2.0),
        raw.f64("box.im_max")?.unwrap_or(20.0),
    )?)
}

struct BranchResult {
    state: SteadyState,
    roots: Vec<sdde_core::analysis::CharRoot>,
    /// Real part of the rightmost root that counts for stability.
    leading: Option<f64>,
}

fn char_roots(cfg: &RunConfig) -> CliResult<()> {
    let base = model_params(cfg)?;
    let sw = sweep(&cfg.raw)?;
    let bx = root_box(&cfg.raw)?;
    let form = cfg.raw.get("char.form").unwrap_or("threshold").to_string();
    let count = cfg.raw.usize("roots.count")?.unwrap_or(5);
    let hopf_tol = cfg.raw.f64("hopf.tol")?.unwrap_or(1e-8);

    let per_value: Vec<CliResult<Vec<BranchResult>>> = sw
        .values
        .par_iter()
        .map(|&v| {
            let params = params_at(&base, &sw, v)?;
            linearise(&cfg.model, &params, &form)?
                .into_iter()
                .map(|(state, cf)| {
                    let cf = cf.ok_or_else(|| {
                        CliError::Unsupported(format!(
                            "no characteristic function for model `{}`",
                            cfg.model
                        ))
                    })?;
                    let search = characteristic_roots(&cf, &bx, None);
                    let leading = search.leading(cf.has_spurious_zero()).map(|r| r.lambda.re);
                    let mut roots = search.roots;
                    roots.truncate(count);
                    Ok(BranchResult {
                        state,
                        roots,
                        leading,
                    })
                })
                .collect()
        })
        .collect();
    let per_value = per_value.into_iter().collect::<CliResult<Vec<_>>>()?;

    let extra = vec![
        format!(
            "form={form} box=[{}, {}]x[-{}, {}] roots_per_state={count}",
            num(bx.re_min),
            num(bx.re_max),
            num(bx.im_max),
            num(bx.im_max)
        ),
        "stable: rightmost root (excluding the identically zero root of the differentiated form) has negative real part".into(),
    ];
    let cols: Vec<String> = [
        "param",
        "branch",
        "u",
        "re",
        "im",
        "abs_delta",
        "multiple",
        "stable",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let mut csv = Csv::new(&header(Command::CharRoots, cfg, &extra), &cols);
    let pcell = |v: f64| {
        if sw.name.is_some() {
            num(v)
        } else {
            String::new()
        }
    };
    for (v, branches) in sw.values.iter().zip(&per_value) {
        for (b, br) in branches.iter().enumerate() {
            let stable = match br.leading {
                Some(re) => (re < 0.0).to_string(),
                None => String::new(),
            };
            for r in &br.roots {
                csv.row(&[
                    pcell(*v),
                    b.to_string(),
                    num(br.state.state[0]),
                    num(r.lambda.re),
                    num(r.lambda.im),
                    num(r.residual),
                    r.multiple.to_string(),
                    stable.clone(),
                ]);
            }
        }
    }

    if let Some(name) = &sw.name {
        for (k, w) in per_value.windows(2).enumerate() {
            for (b, (x, y)) in w[0].iter().zip(&w[1]).enumerate() {
                let (Some(a), Some(c)) = (x.leading, y.leading) else {
                    continue;
                };
                if (a < 0.0) == (c < 0.0) {
                    continue;
                }
                let (lo, hi) = (sw.values[k], sw.values[k + 1]);
                let family = |v: f64| -> sdde_core::Result<CharacteristicFunction> {
                    let params = base.merged(&Params::from_pairs(&[(name.as_str(), v)]))?;
                    let lin = linearise(&cfg.model, &params, &form)
                        .map_err(|e| CoreError::Domain(e.to_string()))?;
                    lin.into_iter()
                        .nth(b)
                        .and_then(|(_, cf)| cf)
                        .ok_or_else(|| CoreError::Domain(format!("branch {b} vanished at {v}")))
                };
                let found: Vec<HopfPoint> = hopf_scan(&family, lo, hi, 1, &bx, hopf_tol)?;
                if found.is_empty() {
                    csv.comment(&format!(
                        "real root crosses zero on branch {b} for {name} in [{}, {}]",
                        num(lo),
                        num(hi)
                    ));
                }
                for h in found {
                    csv.comment(&format!(
                        "hopf {name}={} omega={} branch={b} destabilising={}",
                        num(h.param),
                        num(h.omega),
                        h.destabilising
                    ));
                }
            }
        }
    }
    write_to(cfg.output.as_deref(), &csv.into_string())
}

fn steady(cfg: &RunConfig) -> CliResult<()> {
    let base = model_params(cfg)?;
    let sw = sweep(&cfg.raw)?;
    let form = cfg.raw.get("char.form").unwrap_or("threshold").to_string();
    let bx = root_box(&cfg.raw)?;
    type Classified = Vec<(SteadyState, Option<bool>)>;
    let per_value: Vec<CliResult<Classified>> = sw
        .values
        .par_iter()
        .map(|&v| {
            let params = params_at(&base, &sw, v)?;
            Ok(linearise(&cfg.model, &params, &form)?
                .into_iter()
                .map(|(s, cf)| {
                    let stable = cf.map(|cf| {
                        characteristic_roots(&cf, &bx, None)
                            .leading(cf.has_spurious_zero())
                            .is_none_or(|r| r.lambda.re < 0.0)
                    });
                    (s, stable)
                })
                .collect())
        })
        .collect();
    let per_value = per_value.into_iter().collect::<CliResult<Vec<_>>>()?;
    let (nu, nt) = per_value
        .iter()
        .flatten()
        .next()
        .map_or((1, 0), |(s, _)| (s.state.len(), s.delays.len()));
    let mut cols = vec!["param".to_string(), "branch".to_string()];
    cols.extend((1..=nu).map(|i| format!("u{i}")));
    cols.extend((1..=nt).map(|i| format!("tau{i}")));
    cols.push("stable".into());
    let extra = vec!["stable: empty when no characteristic function is available".to_string()];
    let mut csv = Csv::new(&header(Command::SteadyStates, cfg, &extra), &cols);
    for (v, states) in sw.values.iter().zip(&per_value) {
        for (b, (s, stable)) in states.iter().enumerate() {
            let mut row = vec![
                if sw.name.is_some() {
                    num(*v)
                } else {
                    String::new()
                },
                b.to_string(),
            ];
            row.extend(s.state.iter().map(|&x| num(x)));
            row.extend(s.delays.iter().map(|&x| num(x)));
            row.push(stable.map(|b| b.to_string()).unwrap_or_default());
            csv.row(&row);
        }
    }
    write_to(cfg.output.as_deref(), &csv.into_string())
}

fn poincare(cfg: &RunConfig) -> CliResult<()> {
    let params = model_params(cfg)?;
    let lag = |key: &str, param: &str| -> CliResult<f64> {
        cfg.raw
            .f64(key)?
            .or_else(|| params.get(param))
            .ok_or_else(|| {
                CliError::Config(ConfigError {
                    origin: None,
                    key: Some(key.to_string()),
                    message: format!("model `{}` has no `{param}`; set it", cfg.model),
                })
            })
    };
    let (a1, a2) = (lag("poincare.a1", "a1")?, lag("poincare.a2", "a2")?);
    let transient = cfg.raw.f64("transient")?.unwrap_or(0.0);
    let run = solve(cfg)?;
    let from = run.sol.t0() + transient;
    let trace = poincare_trace(&run.sol, a1, a2, from)?;
    let extra = vec![
        format!("method={} {}", cfg.method(), run.step_desc),
        format!(
            "section u1(t) = 0 with u1' < 0, t >= {}; x = u1(t - {}), y = u1(t - {})",
            num(from),
            num(a1),
            num(a2)
        ),
    ];
    let cols = vec!["t".to_string(), "x".to_string(), "y".to_string()];
    let mut csv = Csv::new(&header(Command::Poincare, cfg, &extra), &cols);
    for p in &trace {
        csv.row(&[num(p.t), num(p.x), num(p.y)]);
    }
    write_to(cfg.output.as_deref(), &csv.into_string())
}
