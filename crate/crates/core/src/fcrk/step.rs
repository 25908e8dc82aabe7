use super::tableau::{poly_eval, FcrkTableau};
use crate::breakpoints::Segment;
use crate::problem::delay_value;
use crate::{
    delayed_argument, DdeProblem, DelayedValues, DenseSolution, Error, PastAccess, Result,
    RhsInput, Side, StepPiece,
};

/// Output of one FCRK step over `[t_n, t_n + h]`.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub t_n: f64,
    pub h: f64,
    /// Stage derivatives `k_i`.
    pub k: Vec<Vec<f64>>,
    /// Continuous-extension coefficients, `(degree + 1) * dim` values.
    pub coeffs: Vec<f64>,
    /// Deviating arguments, `alphas[i * n_delays + j]` for stage `i`, delay `j`.
    pub alphas: Vec<f64>,
    /// Some delayed argument fell beyond `t_n`.
    pub overlapped: bool,
}

impl StepResult {
    pub fn dim(&self) -> usize {
        self.k.first().map_or(0, |k| k.len())
    }

    /// The interpolant as a piece ending at `t_end`.
    pub fn piece(&self, t_end: f64) -> StepPiece {
        StepPiece::new(self.t_n, t_end, self.h, self.dim(), self.coeffs.clone())
    }

    pub fn u_start(&self) -> &[f64] {
        &self.coeffs[..self.dim()]
    }

    /// `u^h(t_n + theta h)`.
    pub fn eval_theta(&self, theta: f64, out: &mut [f64]) {
        let d = self.dim();
        let deg = self.coeffs.len() / d - 1;
        out.copy_from_slice(&self.coeffs[deg * d..]);
        for m in (0..deg).rev() {
            for (o, c) in out.iter_mut().zip(&self.coeffs[m * d..(m + 1) * d]) {
                *o = *o * theta + c;
            }
        }
    }
}

/// Stage interpolant `eta_i(s) = u_n + h sum_j a_ij(theta) k_j`.
struct StageInterp<'a> {
    t_n: f64,
    h: f64,
    u_n: &'a [f64],
    k: &'a [Vec<f64>],
    row: &'a [Vec<f64>],
}

impl StageInterp<'_> {
    fn eval(&self, s: f64, out: &mut [f64]) {
        out.copy_from_slice(self.u_n);
        let theta = (s - self.t_n) / self.h;
        for (p, kj) in self.row.iter().zip(self.k) {
            let w = self.h * poly_eval(p, theta);
            if w != 0.0 {
                for (o, kv) in out.iter_mut().zip(kj) {
                    *o += w * kv;
                }
            }
        }
    }
}

struct StagePast<'a> {
    sol: &'a DenseSolution,
    eta: &'a StageInterp<'a>,
}

impl PastAccess for StagePast<'_> {
    fn eval(&self, s: f64, out: &mut [f64]) {
        if s > self.eta.t_n {
            self.eta.eval(s, out)
        } else {
            self.sol.eval_into(s, out)
        }
    }

    fn knots(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        let t_n = self.eta.t_n;
        self.sol.knots_in(lo, hi.min(t_n), out);
        if lo < t_n && t_n < hi {
            out.push(t_n);
        }
    }
}

/// Value of the numerical solution at the deviating argument `s`, read
/// through the frozen segment of the delay when one is given. Returns whether
/// the stage interpolant was used.
fn delayed_value(
    sol: &DenseSolution,
    seg: Option<&Segment>,
    s: f64,
    eta: &StageInterp<'_>,
    out: &mut [f64],
) -> bool {
    let t_n = eta.t_n;
    if let Some(seg) = seg {
        if let Some(hi) = seg.hi {
            if s >= hi {
                sol.eval_piece(sol.piece_at(hi, Side::Left), s, out);
                return false;
            }
        }
        if let Some(lo) = seg.lo {
            if s < lo {
                if lo >= t_n {
                    eta.eval(s, out);
                    return true;
                }
                sol.eval_piece(sol.piece_at(lo, Side::Right), s, out);
                return false;
            }
        }
    }
    if s > t_n {
        eta.eval(s, out);
        true
    } else {
        sol.eval_into(s, out);
        false
    }
}

/// Advances the solution from `t_n` by `h` with the given tableau.
///
/// With `segments`, delayed values are read from the analytic extension of
/// the solution pieces bordering each delay's current interval, so that the
/// step sees a smooth problem even if it straddles a breaking point.
pub fn take_step(
    problem: &DdeProblem,
    sol: &DenseSolution,
    tab: &FcrkTableau,
    t_n: f64,
    h: f64,
    u_n: &[f64],
    segments: Option<&[Segment]>,
) -> Result<StepResult> {
    let d = problem.dim;
    let nd = problem.delays.len();
    let s_count = tab.stages();
    let a_nodes = tab.a_at_nodes();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(s_count);
    let mut alphas = vec![0.0; s_count * nd];
    let mut delayed = vec![0.0; nd * d];
    let mut taus = vec![0.0; nd];
    let mut stage_u = vec![0.0; d];
    let mut overlapped = false;

    for i in 0..s_count {
        stage_u.copy_from_slice(u_n);
        for (j, kj) in k.iter().enumerate() {
            let w = h * a_nodes[i][j];
            if w != 0.0 {
                for (u, kv) in stage_u.iter_mut().zip(kj) {
                    *u += w * kv;
                }
            }
        }
        let t_i = t_n + tab.c[i] * h;
        let eta = StageInterp {
            t_n,
            h,
            u_n,
            k: &k,
            row: &tab.a[i],
        };
        for j in 0..nd {
            let alpha = delayed_argument(problem, j, t_i, &stage_u)?;
            alphas[i * nd + j] = alpha;
            taus[j] = delay_value(problem, j, t_i, &stage_u);
            let seg = segments.map(|s| &s[j]);
            overlapped |= delayed_value(sol, seg, alpha, &eta, &mut delayed[j * d..(j + 1) * d]);
        }
        let past = StagePast { sol, eta: &eta };
        let input = RhsInput {
            t: t_i,
            u: &stage_u,
            delayed: DelayedValues::new(&delayed, d),
            taus: &taus,
            past: &past,
        };
        let mut ki = vec![0.0; d];
        (problem.rhs)(&input, &mut ki);
        if ki.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: t_i, stage: i });
        }
        k.push(ki);
    }

    let deg = tab.degree();
    let mut coeffs = vec![0.0; (deg + 1) * d];
    coeffs[..d].copy_from_slice(u_n);
    for (bi, ki) in tab.b.iter().zip(&k) {
        for (m, bc) in bi.iter().enumerate().skip(1) {
            if *bc != 0.0 {
                let w = h * bc;
                for (c, kv) in coeffs[m * d..(m + 1) * d].iter_mut().zip(ki) {
                    *c += w * kv;
                }
            }
        }
    }
    Ok(StepResult {
        t_n,
        h,
        k,
        coeffs,
        alphas,
        overlapped,
    })
}
