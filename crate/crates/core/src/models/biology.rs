use std::sync::Arc;

use super::{check_hill_exponent, check_positive, hill, Model, Params};
use crate::quadrature::gauss5_split;
use crate::threshold::{augment_problem, initial_threshold_delay, ThresholdSpec};
use crate::{
    DdeProblem, DelaySpec, DenseSolution, Error, HistoryFunction, Result, RhsFn, RhsInput,
};

/// External forcing `t -> G(t)`.
pub type ForcingFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

fn with_state_history(p: &mut Params, keys: &[(&str, f64)]) {
    for (k, v) in keys {
        p.set(*k, *v);
    }
}

pub(super) fn goodwin_defaults() -> Params {
    let mut p = Params::from_pairs(&[
        ("beta_m", 1.0),
        ("beta_i", 1.0),
        ("beta_e", 1.0),
        ("gamma_m", 0.3),
        ("gamma_i", 0.3),
        ("gamma_e", 0.3),
        ("mu", 0.05),
        ("tau_m", 2.0),
        ("tau_i", 2.0),
        ("theta", 1.0),
        ("s", 10.0),
        ("tf", 200.0),
    ]);
    with_state_history(&mut p, &[("m0", 0.5), ("i0", 0.5), ("e0", 0.5)]);
    p
}

/// Repression `f(E) = theta^s / (theta^s + E^s)`.
fn repression(theta: f64, s: f64) -> impl Fn(f64) -> f64 + Copy {
    move |e| hill(1.0, 0.0, theta, s, e)
}

struct Goodwin {
    beta: [f64; 3],
    gamma: [f64; 3],
    mu: f64,
    tau_m: f64,
    tau_i: f64,
    theta: f64,
    s: f64,
}

impl Goodwin {
    fn from_params(p: &Params) -> Result<Self> {
        check_positive(p, &["gamma_m", "gamma_i", "gamma_e", "theta"])?;
        check_hill_exponent("s", p.req("s")?)?;
        let g = Goodwin {
            beta: [p.req("beta_m")?, p.req("beta_i")?, p.req("beta_e")?],
            gamma: [p.req("gamma_m")?, p.req("gamma_i")?, p.req("gamma_e")?],
            mu: p.req("mu")?,
            tau_m: p.req("tau_m")?,
            tau_i: p.req("tau_i")?,
            theta: p.req("theta")?,
            s: p.req("s")?,
        };
        if g.tau_m < 0.0 || g.tau_i < 0.0 {
            return Err(Error::InvalidParameter {
                name: "tau_m/tau_i".into(),
                reason: "delays must be non-negative".into(),
            });
        }
        Ok(g)
    }
}

/// Goodwin operon model with constant transcription and translation delays:
/// `M' = beta_M e^{-mu tau_M} f(E(t - tau_M)) - gamma_M M`,
/// `I' = beta_I e^{-mu tau_I} M(t - tau_I) - gamma_I I`,
/// `E' = beta_E I - gamma_E E`. Delay 0 is `tau_M`, delay 1 is `tau_I`.
pub fn goodwin(params: &Params) -> Result<Model> {
    let g = Goodwin::from_params(params)?;
    let f = repression(g.theta, g.s);
    let h0 = [params.req("m0")?, params.req("i0")?, params.req("e0")?];
    let start = -(g.tau_m.max(g.tau_i)) - 1.0;
    let history = HistoryFunction::constant(h0.to_vec(), start, 0.0);
    let Goodwin {
        beta,
        gamma,
        mu,
        tau_m,
        tau_i,
        ..
    } = g;
    let (wm, wi) = ((-mu * tau_m).exp(), (-mu * tau_i).exp());
    let rhs: RhsFn = Arc::new(move |inp: &RhsInput<'_>, out: &mut [f64]| {
        let u = inp.u;
        out[0] = beta[0] * wm * f(inp.delayed.get(0)[2]) - gamma[0] * u[0];
        out[1] = beta[1] * wi * inp.delayed.get(1)[0] - gamma[1] * u[1];
        out[2] = beta[2] * u[1] - gamma[2] * u[2];
    });
    let problem = DdeProblem::new("goodwin", 3, history, params.req("tf")?, rhs)
        .with_delay(DelaySpec::Constant(tau_m))
        .with_delay(DelaySpec::Constant(tau_i));
    Ok(Model {
        name: "goodwin".into(),
        params: params.clone(),
        problem,
        exact: None,
        exact_breaking_points: Vec::new(),
        thresholds: Vec::new(),
    })
}

/// The unique steady state `(M*, I*, E*)`: `E* = K f(E*)` with
/// `K = beta_M beta_I beta_E e^{-mu (tau_M + tau_I)} / (gamma_M gamma_I gamma_E)`.
pub fn goodwin_steady_state(params: &Params) -> Result<[f64; 3]> {
    let g = Goodwin::from_params(params)?;
    let f = repression(g.theta, g.s);
    let (wm, wi) = ((-g.mu * g.tau_m).exp(), (-g.mu * g.tau_i).exp());
    let k = g.beta[0] * g.beta[1] * g.beta[2] * wm * wi / (g.gamma[0] * g.gamma[1] * g.gamma[2]);
    if !(k >= 0.0) {
        return Err(Error::Domain("Goodwin gain must be non-negative".into()));
    }
    // e - K f(e) is increasing, negative at 0 and non-negative at K.
    let (mut lo, mut hi) = (0.0, k.max(f64::MIN_POSITIVE));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - k * f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    let e = 0.5 * (lo + hi);
    let m = g.beta[0] * wm * f(e) / g.gamma[0];
    let i = g.beta[1] * wi * m / g.gamma[1];
    Ok([m, i, e])
}

pub(super) fn operon_defaults() -> Params {
    let mut p = Params::from_pairs(&[
        ("beta_m", 1.0),
        ("beta_i", 1.0),
        ("beta_e", 1.0),
        ("gamma_m", 0.3),
        ("gamma_i", 0.3),
        ("gamma_e", 0.3),
        ("mu", 0.05),
        ("theta", 1.0),
        ("s", 10.0),
        ("a_m", 2.0),
        ("a_i", 2.0),
        ("vm_lo", 0.5),
        ("vm_hi", 1.5),
        ("vm_theta", 1.0),
        ("vm_n", 2.0),
        ("vi_lo", 0.5),
        ("vi_hi", 1.5),
        ("vi_theta", 1.0),
        ("vi_n", 2.0),
        ("tf", 200.0),
    ]);
    with_state_history(&mut p, &[("m0", 0.5), ("i0", 0.5), ("e0", 0.5)]);
    p
}

/// Goodwin model with threshold transcription and translation delays
/// `int_{t - tau_M}^t v_M(E) = a_M` and `int_{t - tau_I}^t v_I(M) = a_I`.
///
/// The two delays are driven by different state components, so no single
/// time rescaling turns both into constants. The returned problem is
/// augmented to `(M, I, E, tau_M, tau_I)`.
pub fn operon(params: &Params) -> Result<Model> {
    check_positive(
        params,
        &[
            "gamma_m", "gamma_i", "gamma_e", "theta", "a_m", "a_i", "vm_lo", "vm_hi", "vm_theta",
            "vi_lo", "vi_hi", "vi_theta",
        ],
    )?;
    for k in ["s", "vm_n", "vi_n"] {
        check_hill_exponent(k, params.req(k)?)?;
    }
    let r = |k: &str| params.req(k);
    let beta = [r("beta_m")?, r("beta_i")?, r("beta_e")?];
    let gamma = [r("gamma_m")?, r("gamma_i")?, r("gamma_e")?];
    let mu = r("mu")?;
    let f = repression(r("theta")?, r("s")?);
    let vm_p = (r("vm_lo")?, r("vm_hi")?, r("vm_theta")?, r("vm_n")?);
    let vi_p = (r("vi_lo")?, r("vi_hi")?, r("vi_theta")?, r("vi_n")?);
    let vm = move |e: f64| hill(vm_p.0, vm_p.1, vm_p.2, vm_p.3, e);
    let vi = move |m: f64| hill(vi_p.0, vi_p.1, vi_p.2, vi_p.3, m);
    let spec_m = ThresholdSpec::new(
        Arc::new(move |_, u: &[f64]| vm(u[2])),
        r("a_m")?,
        vm_p.0.min(vm_p.1),
        vm_p.0.max(vm_p.1),
    );
    let spec_i = ThresholdSpec::new(
        Arc::new(move |_, u: &[f64]| vi(u[0])),
        r("a_i")?,
        vi_p.0.min(vi_p.1),
        vi_p.0.max(vi_p.1),
    );
    let reach = (spec_m.a / spec_m.v_min).max(spec_i.a / spec_i.v_min);
    let h0 = vec![r("m0")?, r("i0")?, r("e0")?];
    let history = HistoryFunction::constant(h0, -reach - 1.0, 0.0);
    let rhs: RhsFn = Arc::new(move |inp: &RhsInput<'_>, out: &mut [f64]| {
        let u = inp.u;
        let (dm, di) = (inp.delayed.get(0), inp.delayed.get(1));
        let (tm, ti) = (inp.taus[0], inp.taus[1]);
        out[0] = beta[0] * (-mu * tm).exp() * vm(u[2]) / vm(dm[2]) * f(dm[2]) - gamma[0] * u[0];
        out[1] = beta[1] * (-mu * ti).exp() * vi(u[0]) / vi(di[0]) * di[0] - gamma[1] * u[1];
        out[2] = beta[2] * u[1] - gamma[2] * u[2];
    });
    let problem = DdeProblem::new("operon", 3, history, r("tf")?, rhs)
        .with_delay(DelaySpec::Threshold(spec_m))
        .with_delay(DelaySpec::Threshold(spec_i));
    let aug = augment_problem(&problem, None)?;
    Ok(Model {
        name: "operon".into(),
        params: params.clone(),
        problem: aug.problem,
        exact: None,
        exact_breaking_points: Vec::new(),
        thresholds: aug.thresholds.into_iter().map(|(_, s)| s).collect(),
    })
}

pub(super) fn g0_defaults() -> Params {
    Params::from_pairs(&[
        ("kappa", 0.1),
        ("gamma", 0.2),
        ("tau", 2.2),
        ("f", 1.77),
        ("theta", 1.0),
        ("s", 2.0),
        ("history", 1.0),
        ("tf", 100.0),
    ])
}

/// Amplification `A = 2 e^{-gamma tau}` of the G0 cell-cycle model.
pub fn g0_amplification(gamma: f64, tau: f64) -> f64 {
    2.0 * (-gamma * tau).exp()
}

/// Positive steady state from `kappa = (A - 1) beta(Q*)`, when it exists.
pub fn g0_steady_state(params: &Params) -> Result<Option<f64>> {
    let r = |k: &str| params.req(k);
    let a = g0_amplification(r("gamma")?, r("tau")?);
    let (kappa, f, theta, s) = (r("kappa")?, r("f")?, r("theta")?, r("s")?);
    if a <= 1.0 {
        return Ok(None);
    }
    let b = kappa / (a - 1.0);
    if !(b > 0.0 && b < f) {
        return Ok(None);
    }
    Ok(Some(theta * (f / b - 1.0).powf(1.0 / s)))
}

/// `Q' = -(kappa + beta(Q)) Q + A beta(Q(t - tau)) Q(t - tau)` with
/// `beta(Q) = f theta^s / (theta^s + Q^s)`.
pub fn g0_cell_cycle(params: &Params) -> Result<Model> {
    check_positive(params, &["tau", "f", "theta"])?;
    let r = |k: &str| params.req(k);
    let (kappa, tau, f, theta, s) = (r("kappa")?, r("tau")?, r("f")?, r("theta")?, r("s")?);
    let a = g0_amplification(r("gamma")?, tau);
    let beta = move |q: f64| hill(f, 0.0, theta, s, q);
    let history = HistoryFunction::constant(vec![r("history")?], -tau - 1.0, 0.0);
    let rhs: RhsFn = Arc::new(move |inp: &RhsInput<'_>, out: &mut [f64]| {
        let q = inp.u[0];
        let qd = inp.delayed.get(0)[0];
        out[0] = -(kappa + beta(q)) * q + a * beta(qd) * qd;
    });
    let problem =
        DdeProblem::new("g0", 1, history, r("tf")?, rhs).with_delay(DelaySpec::Constant(tau));
    Ok(Model {
        name: "g0".into(),
        params: params.clone(),
        problem,
        exact: None,
        exact_breaking_points: Vec::new(),
        thresholds: Vec::new(),
    })
}

pub(super) fn hematopoiesis_defaults() -> Params {
    Params::from_pairs(&[
        ("kappa_delta", 0.014),
        ("f_q", 8.0),
        ("theta_q", 0.08),
        ("s_q", 2.0),
        ("gamma_q", 0.1),
        ("tau_q", 2.8),
        ("kn_lo", 0.002),
        ("kn_hi", 0.01),
        ("kn_theta", 1.0),
        ("tau_np", 7.1),
        ("a", 3.5),
        ("v_lo", 1.0),
        ("v_hi", 2.0),
        ("v_theta", 1.0),
        ("eta_lo", 0.4),
        ("eta_hi", 1.2),
        ("eta_theta", 1.0),
        ("gamma_nm", 0.15),
        ("gamma_nr", 0.0064),
        ("phi_lo", 0.36),
        ("phi_hi", 1.5),
        ("phi_theta", 1.0),
        ("gamma_n", 0.35),
        ("g", 1.0),
        ("q0", 1.1),
        ("nr0", 2.26),
        ("n0", 0.22),
        ("tf", 50.0),
    ])
}

/// Rates of the neutrophil model. Every `G`-dependent rate is a Hill
/// function of exponent one in `G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HematopoiesisParams {
    pub kappa_delta: f64,
    pub f_q: f64,
    pub theta_q: f64,
    pub s_q: f64,
    pub gamma_q: f64,
    pub tau_q: f64,
    pub kn: (f64, f64, f64),
    pub tau_np: f64,
    pub a: f64,
    pub v: (f64, f64, f64),
    pub eta: (f64, f64, f64),
    pub gamma_nm: f64,
    pub gamma_nr: f64,
    pub phi: (f64, f64, f64),
    pub gamma_n: f64,
    /// Constant forcing used when no forcing function is supplied.
    pub g: f64,
    pub history: [f64; 3],
    pub tf: f64,
}

impl HematopoiesisParams {
    pub fn from_params(p: &Params) -> Result<Self> {
        check_positive(
            p,
            &[
                "f_q",
                "theta_q",
                "tau_q",
                "tau_np",
                "a",
                "v_lo",
                "v_hi",
                "v_theta",
                "kn_theta",
                "eta_theta",
                "phi_theta",
            ],
        )?;
        check_hill_exponent("s_q", p.req("s_q")?)?;
        let r = |k: &str| p.req(k);
        let tri = |k: &str| -> Result<(f64, f64, f64)> {
            Ok((
                r(&format!("{k}_lo"))?,
                r(&format!("{k}_hi"))?,
                r(&format!("{k}_theta"))?,
            ))
        };
        Ok(HematopoiesisParams {
            kappa_delta: r("kappa_delta")?,
            f_q: r("f_q")?,
            theta_q: r("theta_q")?,
            s_q: r("s_q")?,
            gamma_q: r("gamma_q")?,
            tau_q: r("tau_q")?,
            kn: tri("kn")?,
            tau_np: r("tau_np")?,
            a: r("a")?,
            v: tri("v")?,
            eta: tri("eta")?,
            gamma_nm: r("gamma_nm")?,
            gamma_nr: r("gamma_nr")?,
            phi: tri("phi")?,
            gamma_n: r("gamma_n")?,
            g: r("g")?,
            history: [r("q0")?, r("nr0")?, r("n0")?],
            tf: r("tf")?,
        })
    }

    pub fn beta(&self, q: f64) -> f64 {
        hill(self.f_q, 0.0, self.theta_q, self.s_q, q)
    }

    pub fn kappa_n(&self, g: f64) -> f64 {
        hill(self.kn.0, self.kn.1, self.kn.2, 1.0, g)
    }

    pub fn velocity(&self, g: f64) -> f64 {
        hill(self.v.0, self.v.1, self.v.2, 1.0, g)
    }

    pub fn eta(&self, g: f64) -> f64 {
        hill(self.eta.0, self.eta.1, self.eta.2, 1.0, g)
    }

    pub fn phi(&self, g: f64) -> f64 {
        hill(self.phi.0, self.phi.1, self.phi.2, 1.0, g)
    }

    /// `A_Q = 2 e^{-gamma_Q tau_Q}`.
    pub fn a_q(&self) -> f64 {
        g0_amplification(self.gamma_q, self.tau_q)
    }

    pub fn v_bounds(&self) -> (f64, f64) {
        (self.v.0.min(self.v.1), self.v.0.max(self.v.1))
    }

    /// Longest lag the model can reach: `max(tau_Q, tau_NP + a / v_min)`.
    pub fn reach(&self) -> f64 {
        self.tau_q.max(self.tau_np + self.a / self.v_bounds().0)
    }

    /// Threshold spec of the maturation delay; `V` depends on `t` through
    /// the forcing only.
    pub fn maturation_spec(&self, forcing: &ForcingFn) -> ThresholdSpec {
        let p = *self;
        let g = forcing.clone();
        let (lo, hi) = self.v_bounds();
        ThresholdSpec::new(
            Arc::new(move |t, _: &[f64]| p.velocity(g(t))),
            self.a,
            lo,
            hi,
        )
        .non_autonomous()
    }

    /// `log A_N(t)` from its integral definition, given `tau_NM(t)`.
    pub fn log_amplification(&self, forcing: &ForcingFn, t: f64, tau_nm: f64) -> f64 {
        let hi = t - tau_nm;
        let lo = hi - self.tau_np;
        let integral = gauss5_split(lo, hi, &[], 64, |s| self.eta(forcing(s)));
        integral - self.gamma_nm * tau_nm
    }
}

/// Indices of the augmented neutrophil state.
pub mod hematopoiesis_state {
    pub const Q: usize = 0;
    pub const N_R: usize = 1;
    pub const N: usize = 2;
    pub const TAU_NM: usize = 3;
    pub const A_N: usize = 4;
}

/// Stem cell and neutrophil model with a G-CSF-dependent maturation
/// threshold, already in differentiated form `(Q, N_R, N, tau_NM, A_N)`:
///
/// `Q' = -(kappa_N(G) + kappa_delta + beta(Q)) Q + A_Q beta(Q(t - tau_Q)) Q(t - tau_Q)`,
/// `N_R' = A_N kappa_N(G(t - tau_N)) Q(t - tau_N) V(G(t)) / V(G(t - tau_NM)) - (gamma_NR + phi(G)) N_R`,
/// `N' = phi(G) N_R - gamma_N N`,
/// `tau_NM' = 1 - V(G(t)) / V(G(t - tau_NM))`,
/// `A_N' = A_N [(1 - tau_NM') (eta(G(t - tau_NM)) - eta(G(t - tau_N))) - gamma_NM tau_NM']`,
///
/// with `tau_N = tau_NP + tau_NM`. `G` is a prescribed forcing (constant
/// `g` by default). Delay 0 is `tau_Q`, delay 1 is `tau_N`.
pub fn hematopoiesis(params: &Params, forcing: Option<ForcingFn>) -> Result<Model> {
    use hematopoiesis_state as ix;
    let p = HematopoiesisParams::from_params(params)?;
    let forcing: ForcingFn = match forcing {
        Some(g) => g,
        None => {
            let g = p.g;
            Arc::new(move |_| g)
        }
    };
    let start = -p.reach() - 1.0;
    let base = HistoryFunction::constant(p.history.to_vec(), start, 0.0);
    let mut spec = p.maturation_spec(&forcing);
    let tau0 = initial_threshold_delay(&spec, &base)?;
    let an0 = p.log_amplification(&forcing, 0.0, tau0).exp();
    spec.delay_component = Some(ix::TAU_NM);
    let history = base.with_constant_components(&[tau0, an0]);
    let g = forcing.clone();
    let a_q = p.a_q();
    let rhs: RhsFn = Arc::new(move |inp: &RhsInput<'_>, out: &mut [f64]| {
        let (t, u) = (inp.t, inp.u);
        let tau_nm = u[ix::TAU_NM];
        let tau_n = p.tau_np + tau_nm;
        let (g_now, g_nm, g_n) = (g(t), g(t - tau_nm), g(t - tau_n));
        let q = u[ix::Q];
        let qd = inp.delayed.get(0)[ix::Q];
        let qn = inp.delayed.get(1)[ix::Q];
        let ratio = p.velocity(g_now) / p.velocity(g_nm);
        let dtau = 1.0 - ratio;
        out[ix::Q] = -(p.kappa_n(g_now) + p.kappa_delta + p.beta(q)) * q + a_q * p.beta(qd) * qd;
        out[ix::N_R] =
            u[ix::A_N] * p.kappa_n(g_n) * qn * ratio - (p.gamma_nr + p.phi(g_now)) * u[ix::N_R];
        out[ix::N] = p.phi(g_now) * u[ix::N_R] - p.gamma_n * u[ix::N];
        out[ix::TAU_NM] = dtau;
        out[ix::A_N] = u[ix::A_N] * ((1.0 - dtau) * (p.eta(g_nm) - p.eta(g_n)) - p.gamma_nm * dtau);
    });
    let tau_np = p.tau_np;
    let problem = DdeProblem::new("hematopoiesis", 5, history, p.tf, rhs)
        .with_delay(DelaySpec::Constant(p.tau_q))
        .with_delay_flagged(
            DelaySpec::StateDependent(Arc::new(move |_, u: &[f64]| tau_np + u[ix::TAU_NM])),
            true,
        )
        .with_max_delay(p.reach());
    Ok(Model {
        name: "hematopoiesis".into(),
        params: params.clone(),
        problem,
        exact: None,
        exact_breaking_points: Vec::new(),
        thresholds: vec![spec],
    })
}

/// `log A_N(t) - [int eta(G) - gamma_NM tau_NM]` along a computed solution:
/// the residual of the amplification integral after differentiation.
pub fn audit_amplification(
    sol: &DenseSolution,
    params: &HematopoiesisParams,
    forcing: &ForcingFn,
    times: &[f64],
) -> Result<Vec<f64>> {
    use hematopoiesis_state as ix;
    times
        .iter()
        .map(|&t| {
            let u = sol.evaluate(t, None)?;
            let exact = params.log_amplification(forcing, t, u[ix::TAU_NM]);
            Ok(u[ix::A_N].ln() - exact)
        })
        .collect()
}
