use std::fmt;

use crate::{time_tol, times_close, Error, HistoryFunction, Result};

/// How a breaking point was located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tier {
    /// Known exactly (history discontinuity or initial time).
    Mesh,
    Linear,
    Quadratic,
    Secant,
    DoubleSecant,
}

impl Tier {
    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Mesh => "mesh",
            Tier::Linear => "linear",
            Tier::Quadratic => "quadratic",
            Tier::Secant => "secant",
            Tier::DoubleSecant => "double-secant",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The breaking point (and delay) that produced another one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Parent {
    /// Index into [`DenseSolution::breaking_points`].
    pub index: usize,
    pub delay: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakingPoint {
    pub location: f64,
    pub order: i32,
    pub parent: Option<Parent>,
    pub tier: Tier,
}

impl BreakingPoint {
    pub fn given(location: f64, order: i32) -> Self {
        BreakingPoint {
            location,
            order,
            parent: None,
            tier: Tier::Mesh,
        }
    }
}

/// One step of the dense output: `u(t_start + theta h) = sum_m C_m theta^m`.
#[derive(Debug, Clone)]
pub struct StepPiece {
    pub t_start: f64,
    pub t_end: f64,
    /// Nominal step size used to scale `theta` (larger than `t_end - t_start`
    /// for truncated steps).
    pub h: f64,
    dim: usize,
    coeffs: Vec<f64>,
}

impl StepPiece {
    /// `coeffs` holds `C_0, C_1, ...` back to back, each of length `dim`.
    pub fn new(t_start: f64, t_end: f64, h: f64, dim: usize, coeffs: Vec<f64>) -> Self {
        debug_assert!(dim > 0 && coeffs.len().is_multiple_of(dim));
        StepPiece {
            t_start,
            t_end,
            h,
            dim,
            coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() / self.dim - 1
    }

    /// Evaluates the polynomial (or its extension) at `t`.
    pub fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t_start) / self.h;
        let d = self.dim;
        let deg = self.degree();
        out.copy_from_slice(&self.coeffs[deg * d..(deg + 1) * d]);
        for m in (0..deg).rev() {
            let c = &self.coeffs[m * d..(m + 1) * d];
            for (o, ci) in out.iter_mut().zip(c) {
                *o = *o * theta + ci;
            }
        }
    }

    /// Time derivative of the polynomial at `t`.
    pub fn eval_derivative(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t_start) / self.h;
        let d = self.dim;
        let deg = self.degree();
        out.iter_mut().for_each(|o| *o = 0.0);
        for m in (1..=deg).rev() {
            let c = &self.coeffs[m * d..(m + 1) * d];
            for (o, ci) in out.iter_mut().zip(c) {
                *o = *o * theta + m as f64 * ci;
            }
        }
        out.iter_mut().for_each(|o| *o /= self.h);
    }
}

/// Selects a one-sided limit at a breaking point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A smooth piece of the dense output or of the history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceRef {
    History(usize),
    Step(usize),
}

/// History plus the accepted steps.
#[derive(Debug, Clone)]
pub struct DenseSolution {
    pub method: String,
    dim: usize,
    history: HistoryFunction,
    initial_value: Vec<f64>,
    steps: Vec<StepPiece>,
    pub breaking_points: Vec<BreakingPoint>,
}

impl DenseSolution {
    pub fn new(
        method: impl Into<String>,
        history: HistoryFunction,
        initial_value: Vec<f64>,
    ) -> Self {
        DenseSolution {
            method: method.into(),
            dim: history.dim(),
            history,
            initial_value,
            steps: Vec::new(),
            breaking_points: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t0(&self) -> f64 {
        self.history.end()
    }

    /// End of the integrated range.
    pub fn t_end(&self) -> f64 {
        self.steps.last().map_or(self.t0(), |s| s.t_end)
    }

    pub fn history(&self) -> &HistoryFunction {
        &self.history
    }

    pub fn steps(&self) -> &[StepPiece] {
        &self.steps
    }

    pub fn initial_value(&self) -> &[f64] {
        &self.initial_value
    }

    pub fn push_step(&mut self, step: StepPiece) {
        debug_assert!(step.t_start < step.t_end);
        self.steps.push(step);
    }

    /// Mesh points `t0, t1, ..., t_end`.
    pub fn mesh(&self) -> Vec<f64> {
        std::iter::once(self.t0())
            .chain(self.steps.iter().map(|s| s.t_end))
            .collect()
    }

    /// The piece owning `t` from the given side. Points before the history
    /// and after the last step map to the outermost pieces (extension).
    pub fn piece_at(&self, t: f64, side: Side) -> PieceRef {
        let t0 = self.t0();
        let in_history = match side {
            Side::Left => t <= t0 || self.steps.is_empty(),
            Side::Right => t < t0 || self.steps.is_empty(),
        };
        if in_history {
            let idx = match side {
                Side::Left => self.history.piece_index_left(t),
                Side::Right => self.history.piece_index(t),
            };
            return PieceRef::History(idx);
        }
        let n = self.steps.len();
        let idx = match side {
            Side::Left => self.steps.partition_point(|s| s.t_end < t),
            Side::Right => self.steps.partition_point(|s| s.t_end <= t),
        };
        PieceRef::Step(idx.min(n - 1))
    }

    pub fn eval_piece(&self, piece: PieceRef, t: f64, out: &mut [f64]) {
        match piece {
            PieceRef::History(i) => self.history.eval_piece(i, t, out),
            PieceRef::Step(i) => self.steps[i].eval(t, out),
        }
    }

    /// Unchecked evaluation: history convention up to `t0`, left-piece
    /// convention at mesh points, extension outside the covered range.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        if t <= self.t0() {
            self.history.eval_piece(self.history.piece_index(t), t, out);
        } else {
            self.eval_piece(self.piece_at(t, Side::Left), t, out);
        }
    }

    fn check_range(&self, t: f64) -> Result<()> {
        let (lo, hi) = (self.history.start(), self.t_end());
        if t < lo - time_tol(lo) || t > hi + time_tol(hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        Ok(())
    }

    /// Evaluates the solution at `t`. With a side selector, `t` must be a
    /// known breaking point and the corresponding one-sided value is returned.
    pub fn evaluate(&self, t: f64, side: Option<Side>) -> Result<Vec<f64>> {
        self.check_range(t)?;
        let mut out = vec![0.0; self.dim];
        match side {
            None => {
                if times_close(t, self.t0()) && t >= self.t0() {
                    out.copy_from_slice(&self.initial_value);
                } else {
                    self.eval_into(t, &mut out);
                }
            }
            Some(side) => {
                let known = self
                    .breaking_points
                    .iter()
                    .any(|b| times_close(b.location, t))
                    || self
                        .history
                        .discontinuities()
                        .iter()
                        .any(|d| times_close(d.t, t));
                if !known {
                    return Err(Error::Domain(format!(
                        "one-sided evaluation requested at {t}, which is not a breaking point"
                    )));
                }
                if side == Side::Right && times_close(t, self.t0()) {
                    out.copy_from_slice(&self.initial_value);
                } else {
                    self.eval_piece(self.piece_at(t, side), t, &mut out);
                }
            }
        }
        Ok(out)
    }

    /// Time derivative of the dense output at `t > t0`.
    pub fn derivative(&self, t: f64) -> Result<Vec<f64>> {
        self.check_range(t)?;
        let mut out = vec![0.0; self.dim];
        match self.piece_at(t, Side::Left) {
            PieceRef::Step(i) => self.steps[i].eval_derivative(t, &mut out),
            PieceRef::History(_) => {
                return Err(Error::Domain(
                    "derivative is only available on the integrated range".into(),
                ))
            }
        }
        Ok(out)
    }

    /// Mesh points strictly inside `(lo, hi)`, including `t0` and history
    /// piece boundaries.
    pub fn knots_in(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        for i in 1..self.history.piece_count() {
            let b = self.history.piece_bounds(i).0;
            if b > lo && b < hi {
                out.push(b);
            }
        }
        let t0 = self.t0();
        if t0 > lo && t0 < hi {
            out.push(t0);
        }
        let first = self.steps.partition_point(|s| s.t_end <= lo);
        for s in &self.steps[first..] {
            if s.t_end >= hi {
                break;
            }
            out.push(s.t_end);
        }
    }
}

impl crate::PastAccess for DenseSolution {
    fn eval(&self, s: f64, out: &mut [f64]) {
        self.eval_into(s, out)
    }

    fn knots(&self, lo: f64, hi: f64, out: &mut Vec<f64>) {
        self.knots_in(lo, hi, out)
    }
}
