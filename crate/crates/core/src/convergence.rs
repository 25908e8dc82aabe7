//! Convergence studies against models with closed-form solutions.

use crate::breakpoints::{DetectionOptions, TierChoice};
use crate::fcrk::{integrate, lambda_step, method_by_name, IntegrateOptions};
use crate::models::Model;
use crate::{DenseSolution, Error, Result, Tier};

/// Errors below this are treated as round-off and left out of slope fits.
pub const SATURATION: f64 = 1e-12;

/// `sup |u(t) - u_h(t)|` over `[t0, t_end]`, sampled at `samples + 1`
/// equispaced points of every step (so mesh points are included).
pub fn sup_error(sol: &DenseSolution, exact: &dyn Fn(f64) -> Vec<f64>, samples: usize) -> f64 {
    let mut buf = vec![0.0; sol.dim()];
    let mut err: f64 = 0.0;
    for piece in sol.steps() {
        for i in 0..=samples {
            let t = if i == samples {
                piece.t_end
            } else {
                piece.t_start + (piece.t_end - piece.t_start) * i as f64 / samples as f64
            };
            piece.eval(t, &mut buf);
            let e = exact(t);
            for (a, b) in buf.iter().zip(&e) {
                err = err.max((a - b).abs());
            }
        }
    }
    err
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub err: f64,
    /// Slope of `err` against the previous row.
    pub slope: Option<f64>,
    /// Distance from the reference breaking point to the nearest computed one.
    pub bp_err: Option<f64>,
    pub bp_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub method: String,
    pub detection: bool,
    pub lambda: f64,
    /// Breaking point used to place the mesh.
    pub xi: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Fitted over rows with `err >= SATURATION`.
    pub err_slope: Option<f64>,
    pub bp_slope: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceSettings {
    pub detection: bool,
    /// Placement `h = (xi - t0) / (N + lambda)`.
    pub lambda: f64,
    pub samples_per_step: usize,
}

impl Default for ConvergenceSettings {
    fn default() -> Self {
        ConvergenceSettings {
            detection: true,
            lambda: 0.5,
            samples_per_step: 20,
        }
    }
}

/// First exact breaking point strictly after the initial time.
pub fn reference_breaking_point(model: &Model) -> Option<f64> {
    let t0 = model.problem.t0();
    model
        .exact_breaking_points
        .iter()
        .map(|&(x, _)| x)
        .filter(|&x| x > t0 + crate::time_tol(t0))
        .min_by(f64::total_cmp)
}

fn nearest_computed(sol: &DenseSolution, xi: f64) -> Option<f64> {
    sol.breaking_points
        .iter()
        .filter(|b| b.tier != Tier::Mesh)
        .map(|b| (b.location - xi).abs())
        .min_by(f64::total_cmp)
}

/// Runs `method` on `model` for each `N` in `ns`.
pub fn convergence_study(
    model: &Model,
    method: &str,
    ns: &[usize],
    settings: &ConvergenceSettings,
) -> Result<ConvergenceReport> {
    let exact = model.exact.clone().ok_or_else(|| {
        Error::InvalidProblem(format!("model `{}` has no exact solution", model.name))
    })?;
    let xi = reference_breaking_point(model).ok_or_else(|| {
        Error::InvalidProblem(format!(
            "model `{}` has no breaking point to place",
            model.name
        ))
    })?;
    if !(0.0..1.0).contains(&settings.lambda) {
        return Err(Error::InvalidParameter {
            name: "lambda".into(),
            reason: format!("must lie in [0, 1), got {}", settings.lambda),
        });
    }
    let (tab, forced) = method_by_name(method)?;
    let t0 = model.problem.t0();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "N".into(),
                reason: "must be at least 1".into(),
            });
        }
        let h = lambda_step(t0, xi, n, settings.lambda);
        let mut opts = IntegrateOptions::fixed(h);
        if settings.detection {
            opts.detection = Some(DetectionOptions {
                tier: forced.map_or(TierChoice::Auto, TierChoice::Fixed),
                ..DetectionOptions::default()
            });
        } else {
            opts = opts.without_detection();
        }
        let sol = integrate(&model.problem, &tab, &opts)?;
        let err = sup_error(&sol, &*exact, settings.samples_per_step);
        let bp_err = if settings.detection {
            nearest_computed(&sol, xi)
        } else {
            None
        };
        let prev = rows.last();
        let slope = prev.and_then(|p| fit_slope(&[(p.h, p.err), (h, err)]));
        let bp_slope = prev.and_then(|p| match (p.bp_err, bp_err) {
            (Some(a), Some(b)) => fit_slope(&[(p.h, a), (h, b)]),
            _ => None,
        });
        rows.push(ConvergenceRow {
            n,
            h,
            err,
            slope,
            bp_err,
            bp_slope,
        });
    }
    let err_pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.err >= SATURATION)
        .map(|r| (r.h, r.err))
        .collect();
    let bp_pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.bp_err.filter(|&e| e >= SATURATION).map(|e| (r.h, e)))
        .collect();
    Ok(ConvergenceReport {
        method: method.to_string(),
        detection: settings.detection,
        lambda: settings.lambda,
        xi,
        err_slope: fit_slope(&err_pts),
        bp_slope: fit_slope(&bp_pts),
        rows,
    })
}
