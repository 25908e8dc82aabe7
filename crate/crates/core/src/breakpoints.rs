//! Detection and approximation of breaking points: points where the solution
//! loses smoothness because a deviating argument crosses an earlier one.
//!
//! Each step is first computed on a *smooth sub-problem* in which every delay
//! reads its values from the pieces bordering its current interval between
//! listed breaking points. If some deviating argument leaves its interval
//! during the step, the crossing time is approximated, the step is truncated
//! there and the new point is recorded.

use crate::fcrk::StepResult;
use crate::{
    delayed_argument, time_tol, times_close, BreakingPoint, DdeProblem, Error, Parent, Result, Tier,
};

/// Frozen interval `[lo, hi)` of one delay; `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl Segment {
    pub const UNBOUNDED: Segment = Segment { lo: None, hi: None };
}

/// How the approximation tier is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TierChoice {
    /// Quadratic, upgraded to secant corrections when the required accuracy
    /// exceeds what the quadratic formula delivers.
    Auto,
    Fixed(Tier),
}

/// Closed form used for the quadratic approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadraticForm {
    /// Root of the interpolating quadratic nearest to `t_n`, in the
    /// cancellation-free form `2D / (B + sign(B) sqrt(B^2 + 4AD))`.
    Rationalized,
    /// Second-order binomial expansion of the square root.
    Series,
    /// The textbook root with an explicit `1 - sqrt(...)`.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionOptions {
    pub tier: TierChoice,
    pub quadratic: QuadraticForm,
}

impl Default for DetectionOptions {
    fn default() -> Self {
        DetectionOptions {
            tier: TierChoice::Auto,
            quadratic: QuadraticForm::Rationalized,
        }
    }
}

/// Accuracy exponent `p / (k + 1)` a breaking point of order `k` needs so
/// that a method of order `p` keeps its order.
pub fn required_accuracy(p: usize, k: i32) -> f64 {
    p as f64 / (k as f64 + 1.0)
}

/// Exponent of `h` the given tier achieves for a method of order `p`.
pub fn tier_accuracy(tier: Tier, p: usize) -> f64 {
    let q = match tier {
        Tier::Mesh => 1,
        Tier::Linear => 2,
        Tier::Quadratic => 3,
        Tier::Secant => 4,
        Tier::DoubleSecant => 7,
    };
    q.min(p) as f64
}

fn auto_tier(p: usize, k: i32) -> Tier {
    let need = required_accuracy(p, k);
    [Tier::Quadratic, Tier::Secant, Tier::DoubleSecant]
        .into_iter()
        .find(|&t| tier_accuracy(t, p) >= need)
        .unwrap_or(Tier::DoubleSecant)
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    location: f64,
    order: i32,
    solution_index: usize,
}

/// Sorted list of the breaking points that can still spawn relevant points,
/// with one interval cursor per delay.
#[derive(Debug, Clone)]
pub struct BreakingPointLedger {
    order: usize,
    entries: Vec<Entry>,
    /// Per delay: number of listed points at or below the deviating argument.
    cursor: Vec<usize>,
    monotone: Vec<bool>,
    cutoff: f64,
    options: DetectionOptions,
}

/// A crossing located within a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub delay: usize,
    /// Index of the crossed point in the ledger.
    pub entry: usize,
    pub upward: bool,
}

impl BreakingPointLedger {
    /// Builds the ledger from the known breaking points (history
    /// discontinuities and `t0`) for a method of order `p`.
    pub fn new(
        problem: &DdeProblem,
        p: usize,
        known: &[BreakingPoint],
        u0: &[f64],
        options: DetectionOptions,
    ) -> Result<Self> {
        let mut entries: Vec<Entry> = known
            .iter()
            .enumerate()
            .filter(|(_, b)| b.order <= p as i32 - 3)
            .map(|(i, b)| Entry {
                location: b.location,
                order: b.order,
                solution_index: i,
            })
            .collect();
        entries.sort_by(|a, b| a.location.total_cmp(&b.location));
        let t0 = problem.t0();
        let cursor = (0..problem.delays.len())
            .map(|j| {
                let alpha = delayed_argument(problem, j, t0, u0)?;
                Ok(entries.partition_point(|e| e.location <= alpha))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(BreakingPointLedger {
            order: p,
            entries,
            cursor,
            monotone: problem.monotone.clone(),
            cutoff: t0 + (p as f64 - 1.0) * problem.reach(),
            options,
        })
    }

    /// Detection is switched off past `t0 + (p - 1) tau_max`.
    pub fn active_at(&self, t: f64) -> bool {
        t <= self.cutoff
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn locations(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.location).collect()
    }

    /// The frozen interval of every delay.
    pub fn segments(&self) -> Vec<Segment> {
        self.cursor
            .iter()
            .map(|&c| Segment {
                lo: c.checked_sub(1).map(|i| self.entries[i].location),
                hi: self.entries.get(c).map(|e| e.location),
            })
            .collect()
    }

    /// Points still to be tested for delay `j`: the upper neighbour, and for
    /// non-monotone delays the lower one as well.
    pub fn active_points(&self, j: usize) -> Vec<f64> {
        let c = self.cursor[j];
        let mut out = Vec::new();
        if !self.monotone[j] && c > 0 {
            out.push(self.entries[c - 1].location);
        }
        out.extend(self.entries[c..].iter().map(|e| e.location));
        out
    }

    /// Does the deviating argument of delay `j`, moving from `alpha_n` to
    /// `alpha_np1`, leave its interval? Returns the first boundary crossed.
    pub fn crossing_test(&self, j: usize, alpha_n: f64, alpha_np1: f64) -> Option<Crossing> {
        let c = self.cursor[j];
        let crosses = |xi: f64| (alpha_np1 - xi) * (alpha_n - xi) <= 0.0;
        if let Some(e) = self.entries.get(c) {
            if alpha_np1 >= e.location && crosses(e.location) {
                return Some(Crossing {
                    delay: j,
                    entry: c,
                    upward: true,
                });
            }
        }
        if !self.monotone[j] && c > 0 {
            let e = &self.entries[c - 1];
            if alpha_np1 < e.location && crosses(e.location) {
                return Some(Crossing {
                    delay: j,
                    entry: c - 1,
                    upward: false,
                });
            }
        }
        None
    }

    /// Records a crossing: moves the cursor and lists the point if its order
    /// is still relevant. A point already listed at the same location keeps
    /// the lower of the two orders.
    fn commit(&mut self, crossing: Crossing, location: f64, order: i32, solution_index: usize) {
        let j = crossing.delay;
        self.cursor[j] = if crossing.upward {
            crossing.entry + 1
        } else {
            crossing.entry
        };
        if order > self.order as i32 - 3 {
            return;
        }
        if let Some(e) = self
            .entries
            .iter_mut()
            .find(|e| times_close(e.location, location))
        {
            e.order = e.order.min(order);
            return;
        }
        let pos = self.entries.partition_point(|e| e.location <= location);
        for (k, c) in self.cursor.iter_mut().enumerate() {
            if k != j && pos < *c {
                *c += 1;
            }
        }
        if pos < self.cursor[j] {
            self.cursor[j] += 1;
        }
        self.entries.insert(
            pos,
            Entry {
                location,
                order,
                solution_index,
            },
        );
    }
}

/// Approximates the time at which a deviating argument reaches `xi` inside
/// `[t_n, t_n + h]`, from its values at the start, midpoint and end of the
/// step. Falls back to the linear formula when the second difference is
/// negligible. Returns the time and the tier actually used.
#[allow(clippy::too_many_arguments)]
pub fn approximate_breaking_point(
    t_n: f64,
    h: f64,
    alpha_n: f64,
    alpha_mid: f64,
    alpha_np1: f64,
    xi: f64,
    form: QuadraticForm,
    linear_only: bool,
) -> Result<(f64, Tier)> {
    let d1 = (alpha_np1 - alpha_n) / h;
    let d2 = (alpha_np1 - 2.0 * alpha_mid + alpha_n) / (h * h);
    let dist = xi - alpha_n;
    let degenerate = |reason| Error::DegenerateCrossing {
        t: t_n,
        delay: usize::MAX,
        reason,
    };
    let linear = || -> Result<(f64, Tier)> {
        if d1 == 0.0 {
            return Err(degenerate("deviating argument is stationary over the step"));
        }
        let theta = dist / (d1 * h);
        if !(-1e-8..=1.0 + 1e-8).contains(&theta) {
            return Err(degenerate("linear crossing lies outside the step"));
        }
        Ok((t_n + theta.clamp(0.0, 1.0) * h, Tier::Linear))
    };
    if linear_only || d2.abs() <= 1e-10 * d1.abs() / h {
        return linear();
    }
    let theta = match form {
        QuadraticForm::Rationalized => {
            let a = 2.0 * h * h * d2;
            let b = h * (d1 - 2.0 * h * d2);
            let disc = b * b + 4.0 * a * dist;
            if disc < 0.0 {
                return linear();
            }
            let sign = if b != 0.0 { b.signum() } else { dist.signum() };
            let den = b + sign * disc.sqrt();
            if den == 0.0 {
                return linear();
            }
            2.0 * dist / den
        }
        QuadraticForm::Series => {
            let den = d1 - 2.0 * h * d2;
            if den == 0.0 {
                return linear();
            }
            (dist / den - 2.0 * dist * dist * d2 / den.powi(3)) / h
        }
        QuadraticForm::Direct => {
            let q = 2.0 * h * d2 - d1;
            let arg = 1.0 + 8.0 * dist * d2 / (q * q);
            if q == 0.0 || arg < 0.0 {
                return linear();
            }
            q / (4.0 * d2) * (1.0 - arg.sqrt()) / h
        }
    };
    if !theta.is_finite() || !(-1e-8..=1.0 + 1e-8).contains(&theta) {
        return linear();
    }
    Ok((t_n + theta.clamp(0.0, 1.0) * h, Tier::Quadratic))
}

/// Result of a secant correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecantOutcome {
    pub xi: f64,
    /// The secant denominator vanished and the input was returned unchanged.
    pub degenerate: bool,
}

/// One secant step (or two, with `steps = 2`) on `alpha(t) = xi_target`,
/// seeded with the predictor `xi_p` and the step start `(t_n, alpha_n)`.
pub fn secant_correct(
    xi_p: f64,
    t_n: f64,
    alpha_n: f64,
    alpha: &mut dyn FnMut(f64) -> Result<f64>,
    xi_target: f64,
    steps: usize,
) -> Result<SecantOutcome> {
    let (mut x0, mut f0) = (t_n, alpha_n - xi_target);
    let mut x1 = xi_p;
    let mut f1 = alpha(x1)? - xi_target;
    for _ in 0..steps {
        if f1 == 0.0 {
            break;
        }
        let den = f1 - f0;
        if den == 0.0 || !den.is_finite() {
            log::warn!("secant correction degenerate at t = {x1}; keeping predictor");
            return Ok(SecantOutcome {
                xi: x1,
                degenerate: true,
            });
        }
        let x2 = x1 - f1 * (x1 - x0) / den;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = alpha(x1)? - xi_target;
    }
    Ok(SecantOutcome {
        xi: x1,
        degenerate: false,
    })
}

/// What the driver does with a computed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepEvent {
    /// No crossing; accept the whole step.
    Accept,
    /// Accept the step up to a new breaking point at this time.
    TruncateAt(f64),
    /// Crossings sit on the current mesh point and changed the frozen
    /// intervals; recompute the step.
    Redo,
}

/// Checks a computed step for crossings and records what it finds in the
/// ledger and in `points` (the solution's breaking points).
///
/// Crossings located at the start of the step are all recorded at once and
/// the step is redone. Otherwise only the earliest crossing is recorded and
/// the step is truncated there. A crossing that lands on an already known
/// point merges into it, keeping the lower order.
pub fn process_step(
    ledger: &mut BreakingPointLedger,
    problem: &DdeProblem,
    step: &StepResult,
    points: &mut Vec<BreakingPoint>,
) -> Result<StepEvent> {
    let (t_n, h) = (step.t_n, step.h);
    let mut at_start = false;
    let mut best: Option<(f64, Tier, Crossing)> = None;
    for j in 0..problem.delays.len() {
        let Some((xi, tier, cr)) = locate_crossing(ledger, problem, step, j)? else {
            continue;
        };
        if xi - t_n <= time_tol(t_n) {
            record(ledger, cr, t_n, tier, points);
            at_start = true;
        } else if !at_start && best.is_none_or(|(b, _, _)| xi < b) {
            best = Some((xi, tier, cr));
        }
    }
    if at_start {
        return Ok(StepEvent::Redo);
    }
    let Some((xi, tier, cr)) = best else {
        return Ok(StepEvent::Accept);
    };
    debug_assert!(xi <= t_n + h);
    record(ledger, cr, xi, tier, points);
    Ok(StepEvent::TruncateAt(xi))
}

/// Crossing of delay `j` within the step, with its approximate location.
fn locate_crossing(
    ledger: &BreakingPointLedger,
    problem: &DdeProblem,
    step: &StepResult,
    j: usize,
) -> Result<Option<(f64, Tier, Crossing)>> {
    let (t_n, h) = (step.t_n, step.h);
    let mut buf = vec![0.0; step.dim()];
    let mut alpha_at = |theta: f64| -> Result<f64> {
        step.eval_theta(theta, &mut buf);
        delayed_argument(problem, j, t_n + theta * h, &buf)
    };
    let a0 = alpha_at(0.0)?;
    let a1 = alpha_at(1.0)?;
    let Some(cr) = ledger.crossing_test(j, a0, a1) else {
        return Ok(None);
    };
    let am = alpha_at(0.5)?;
    let entry = ledger.entries[cr.entry];
    let tier = match ledger.options.tier {
        TierChoice::Auto => auto_tier(ledger.order, entry.order + 1),
        TierChoice::Fixed(t) => t,
    };
    let (mut xi, mut used) = approximate_breaking_point(
        t_n,
        h,
        a0,
        am,
        a1,
        entry.location,
        ledger.options.quadratic,
        tier == Tier::Linear,
    )
    .map_err(|e| match e {
        Error::DegenerateCrossing { t, reason, .. } => Error::DegenerateCrossing {
            t,
            delay: j,
            reason,
        },
        other => other,
    })?;
    if matches!(tier, Tier::Secant | Tier::DoubleSecant) && xi > t_n {
        let steps = if tier == Tier::Secant { 1 } else { 2 };
        let mut sbuf = vec![0.0; step.dim()];
        let mut alpha = |t: f64| -> Result<f64> {
            step.eval_theta((t - t_n) / h, &mut sbuf);
            delayed_argument(problem, j, t, &sbuf)
        };
        let out = secant_correct(xi, t_n, a0, &mut alpha, entry.location, steps)?;
        if !out.degenerate {
            used = tier;
        }
        xi = out.xi.clamp(t_n, t_n + h);
    }
    Ok(Some((xi, used, cr)))
}

fn record(
    ledger: &mut BreakingPointLedger,
    cr: Crossing,
    location: f64,
    tier: Tier,
    points: &mut Vec<BreakingPoint>,
) {
    let entry = ledger.entries[cr.entry];
    let order = entry.order + 1;
    let index = match points
        .iter()
        .position(|b| times_close(b.location, location))
    {
        Some(i) => {
            if order < points[i].order {
                points[i].order = order;
                points[i].parent = Some(Parent {
                    index: entry.solution_index,
                    delay: cr.delay,
                });
            }
            i
        }
        None => {
            points.push(BreakingPoint {
                location,
                order,
                parent: Some(Parent {
                    index: entry.solution_index,
                    delay: cr.delay,
                }),
                tier,
            });
            points.len() - 1
        }
    };
    ledger.commit(cr, location, points[index].order, index);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_alpha_gives_exact_linear_root() {
        let (xi, tier) = approximate_breaking_point(
            0.0,
            0.1,
            -0.1,
            -0.05,
            0.0,
            0.0,
            QuadraticForm::Rationalized,
            false,
        )
        .unwrap();
        assert_eq!(tier, Tier::Linear);
        assert!((xi - 0.1).abs() <= 1e-15);
    }

    #[test]
    fn quadratic_alpha_is_exact_even_when_tangent_at_start() {
        let alpha = |t: f64| t * t - 0.01;
        let (xi, tier) = approximate_breaking_point(
            0.0,
            0.2,
            alpha(0.0),
            alpha(0.1),
            alpha(0.2),
            0.0,
            QuadraticForm::Rationalized,
            false,
        )
        .unwrap();
        assert_eq!(tier, Tier::Quadratic);
        assert!((xi - 0.1).abs() <= 1e-12);
    }

    #[test]
    fn quadratic_forms_agree_away_from_tangency() {
        let alpha = |t: f64| 0.3 * t * t + t - 0.05;
        let exact = (-1.0 + (1.0f64 + 4.0 * 0.3 * 0.05).sqrt()) / 0.6;
        for form in [
            QuadraticForm::Rationalized,
            QuadraticForm::Series,
            QuadraticForm::Direct,
        ] {
            let (xi, _) = approximate_breaking_point(
                0.0,
                0.1,
                alpha(0.0),
                alpha(0.05),
                alpha(0.1),
                0.0,
                form,
                false,
            )
            .unwrap();
            // The two-term series drops 2 A^2 D^3 / B^5 = 2.25e-5 here.
            let tol = if form == QuadraticForm::Series {
                2.5e-5
            } else {
                1e-13
            };
            assert!((xi - exact).abs() < tol, "{form:?}: {xi} vs {exact}");
        }
    }

    #[test]
    fn stationary_alpha_is_degenerate() {
        let r = approximate_breaking_point(
            0.0,
            0.1,
            0.0,
            0.0,
            0.0,
            0.0,
            QuadraticForm::Rationalized,
            true,
        );
        assert!(matches!(r, Err(Error::DegenerateCrossing { .. })));
    }

    #[test]
    fn secant_reports_degenerate_denominator() {
        let out = secant_correct(0.5, 0.0, 1.0, &mut |_| Ok(1.0), 0.0, 1).unwrap();
        assert!(out.degenerate);
        assert_eq!(out.xi, 0.5);
    }

    #[test]
    fn tier_table() {
        assert_eq!(required_accuracy(4, 0), 4.0);
        assert_eq!(required_accuracy(4, 1), 2.0);
        assert_eq!(auto_tier(4, 0), Tier::Secant);
        assert_eq!(auto_tier(4, 1), Tier::Quadratic);
        assert_eq!(auto_tier(3, 0), Tier::Quadratic);
        for p in 1..=4usize {
            for k in 1..=3 {
                assert!(tier_accuracy(Tier::Quadratic, p) >= required_accuracy(p, k));
            }
        }
        assert!(tier_accuracy(Tier::Secant, 4) >= required_accuracy(4, 0));
    }
}
