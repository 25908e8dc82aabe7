use crate::quadrature::gauss5;
use crate::{DenseSolution, Error, Result, StepPiece};

/// Samples per step piece when bracketing zeros.
const SAMPLES: usize = 8;

fn component(piece: &StepPiece, buf: &mut [f64], k: usize, t: f64) -> f64 {
    piece.eval(t, buf);
    buf[k]
}

fn bisect(f: &mut dyn FnMut(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let neg_lo = f(lo) < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m <= lo || m >= hi {
            break;
        }
        if (f(m) < 0.0) == neg_lo {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Times in `[t_from, t_end]` where component `k` crosses zero downwards.
pub fn downward_zeros(sol: &DenseSolution, k: usize, t_from: f64) -> Vec<f64> {
    let mut buf = vec![0.0; sol.dim()];
    let mut out = Vec::new();
    for piece in sol.steps().iter().filter(|p| p.t_end > t_from) {
        let lo = piece.t_start.max(t_from);
        let width = piece.t_end - lo;
        let mut t0 = lo;
        let mut f0 = component(piece, &mut buf, k, t0);
        for i in 1..=SAMPLES {
            let t1 = if i == SAMPLES {
                piece.t_end
            } else {
                lo + width * i as f64 / SAMPLES as f64
            };
            let f1 = component(piece, &mut buf, k, t1);
            if f0 > 0.0 && f1 <= 0.0 {
                let t = if f1 == 0.0 {
                    t1
                } else {
                    bisect(&mut |t| component(piece, &mut buf, k, t), t0, t1)
                };
                piece.eval_derivative(t, &mut buf);
                if buf[k] < 0.0 {
                    out.push(t);
                }
            }
            t0 = t1;
            f0 = f1;
        }
    }
    out
}

/// A point of the section `u(t) = 0, u'(t) < 0` in delayed coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionPoint {
    pub t: f64,
    /// `u(t - a1)`.
    pub x: f64,
    /// `u(t - a2)`.
    pub y: f64,
}

/// Section points of a scalar solution from `t_from` on.
pub fn poincare_trace(
    sol: &DenseSolution,
    a1: f64,
    a2: f64,
    t_from: f64,
) -> Result<Vec<SectionPoint>> {
    downward_zeros(sol, 0, t_from)
        .into_iter()
        .map(|t| {
            Ok(SectionPoint {
                t,
                x: sol.evaluate(t - a1, None)?[0],
                y: sol.evaluate(t - a2, None)?[0],
            })
        })
        .collect()
}

/// Mean of the points.
pub fn centroid(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len().max(1) as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    (sx / n, sy / n)
}

/// Largest angular gap (radians) between consecutive points sorted by
/// angle about `center`, wrapping around. Small values mean the points
/// surround `center` without holes.
pub fn max_angular_gap(points: &[(f64, f64)], center: (f64, f64)) -> f64 {
    if points.is_empty() {
        return std::f64::consts::TAU;
    }
    let mut angles: Vec<f64> = points
        .iter()
        .map(|(x, y)| (y - center.1).atan2(x - center.0))
        .collect();
    angles.sort_by(f64::total_cmp);
    let wrap = angles[0] + std::f64::consts::TAU - angles[angles.len() - 1];
    angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicNorms {
    /// `((1/T) int |u|^2)^{1/2}`.
    pub l2: f64,
    pub max: f64,
    pub min: f64,
}

/// Norms of component `k` over `[t_start, t_start + period]`.
///
/// The quadrature is exact on each polynomial piece of degree up to four;
/// extrema are located by bisecting sign changes of the derivative.
pub fn periodic_norms(
    sol: &DenseSolution,
    k: usize,
    t_start: f64,
    period: f64,
) -> Result<PeriodicNorms> {
    let t_end = t_start + period;
    if !(period > 0.0) || t_start < sol.t0() || t_end > sol.t_end() + crate::time_tol(t_end) {
        return Err(Error::OutOfRange {
            t: t_end,
            lo: sol.t0(),
            hi: sol.t_end(),
        });
    }
    let mut buf = vec![0.0; sol.dim()];
    let (mut sq, mut max, mut min) = (0.0, f64::NEG_INFINITY, f64::INFINITY);
    for piece in sol.steps() {
        let lo = piece.t_start.max(t_start);
        let hi = piece.t_end.min(t_end);
        if hi <= lo {
            continue;
        }
        sq += gauss5(lo, hi, |t| component(piece, &mut buf, k, t).powi(2));
        let mut track = |t: f64, buf: &mut [f64]| {
            let v = component(piece, buf, k, t);
            max = f64::max(max, v);
            min = f64::min(min, v);
        };
        track(lo, &mut buf);
        track(hi, &mut buf);
        let deriv = |t: f64, buf: &mut [f64]| {
            piece.eval_derivative(t, buf);
            buf[k]
        };
        let n = 2 * SAMPLES;
        let mut t0 = lo;
        let mut d0 = deriv(t0, &mut buf);
        for i in 1..=n {
            let t1 = lo + (hi - lo) * i as f64 / n as f64;
            let d1 = deriv(t1, &mut buf);
            if (d0 < 0.0) != (d1 < 0.0) {
                let mut scratch = vec![0.0; buf.len()];
                let t = bisect(&mut |t| deriv(t, &mut scratch), t0, t1);
                track(t, &mut buf);
            }
            t0 = t1;
            d0 = d1;
        }
    }
    Ok(PeriodicNorms {
        l2: (sq / period).sqrt(),
        max,
        min,
    })
}
