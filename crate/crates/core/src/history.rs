use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

/// Evaluates one smooth piece of a history function into `out`.
pub type HistoryFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// A point where the history (or the solution) loses smoothness.
///
/// `order` is the number of continuous derivatives: `-1` is a jump in the
/// value, `0` a jump in the first derivative, and so on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discontinuity {
    pub t: f64,
    pub order: i32,
}

#[derive(Clone)]
struct Piece {
    start: f64,
    end: f64,
    f: HistoryFn,
}

/// Initial function on `[t0 - reach, t0]`, given as smooth pieces on
/// half-open intervals `[l, r)`. The last piece is closed at `t0`.
#[derive(Clone)]
pub struct HistoryFunction {
    dim: usize,
    pieces: Vec<Piece>,
    discontinuities: Vec<Discontinuity>,
    constant: Option<Vec<f64>>,
}

impl fmt::Debug for HistoryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HistoryFunction")
            .field("dim", &self.dim)
            .field("start", &self.start())
            .field("end", &self.end())
            .field("pieces", &self.pieces.len())
            .field("discontinuities", &self.discontinuities)
            .finish()
    }
}

impl HistoryFunction {
    /// Constant history equal to `value` on `[start, t0]`.
    pub fn constant(value: Vec<f64>, start: f64, t0: f64) -> Self {
        let v = value.clone();
        let f: HistoryFn = Arc::new(move |_, out: &mut [f64]| out.copy_from_slice(&v));
        HistoryFunction {
            dim: value.len(),
            pieces: vec![Piece { start, end: t0, f }],
            discontinuities: Vec::new(),
            constant: Some(value),
        }
    }

    /// A single smooth piece on `[start, t0]`.
    pub fn smooth(dim: usize, start: f64, t0: f64, f: HistoryFn) -> Self {
        HistoryFunction {
            dim,
            pieces: vec![Piece { start, end: t0, f }],
            discontinuities: Vec::new(),
            constant: None,
        }
    }

    /// Several smooth pieces. `breaks[i]` separates piece `i` from piece
    /// `i + 1` and carries the order of the discontinuity there.
    pub fn piecewise(
        dim: usize,
        start: f64,
        t0: f64,
        fns: Vec<HistoryFn>,
        breaks: Vec<Discontinuity>,
    ) -> Result<Self> {
        if fns.is_empty() || breaks.len() + 1 != fns.len() {
            return Err(Error::InvalidProblem(format!(
                "history needs one more piece than breaks (got {} pieces, {} breaks)",
                fns.len(),
                breaks.len()
            )));
        }
        let mut bounds = Vec::with_capacity(breaks.len() + 2);
        bounds.push(start);
        bounds.extend(breaks.iter().map(|d| d.t));
        bounds.push(t0);
        if bounds.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidProblem(
                "history breaks must be strictly increasing inside (start, t0)".into(),
            ));
        }
        if let Some(d) = breaks.iter().find(|d| d.order < -1) {
            return Err(Error::InvalidProblem(format!(
                "discontinuity order {} below -1",
                d.order
            )));
        }
        let pieces = fns
            .into_iter()
            .enumerate()
            .map(|(i, f)| Piece {
                start: bounds[i],
                end: bounds[i + 1],
                f,
            })
            .collect();
        Ok(HistoryFunction {
            dim,
            pieces,
            discontinuities: breaks,
            constant: None,
        })
    }

    /// The same history with `extra` appended as constant components.
    pub fn with_constant_components(&self, extra: &[f64]) -> Self {
        let d = self.dim;
        let pieces = (0..self.pieces.len())
            .map(|i| {
                let inner = self.pieces[i].f.clone();
                let extra = extra.to_vec();
                let f: HistoryFn = Arc::new(move |t, out: &mut [f64]| {
                    inner(t, &mut out[..d]);
                    out[d..].copy_from_slice(&extra);
                });
                Piece {
                    start: self.pieces[i].start,
                    end: self.pieces[i].end,
                    f,
                }
            })
            .collect();
        let constant = self.constant.as_ref().map(|c| {
            let mut c = c.clone();
            c.extend_from_slice(extra);
            c
        });
        HistoryFunction {
            dim: d + extra.len(),
            pieces,
            discontinuities: self.discontinuities.clone(),
            constant,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn start(&self) -> f64 {
        self.pieces[0].start
    }

    /// The initial time `t0`.
    pub fn end(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].end
    }

    pub fn discontinuities(&self) -> &[Discontinuity] {
        &self.discontinuities
    }

    /// The constant value, if the history was built with [`Self::constant`].
    pub fn constant_value(&self) -> Option<&[f64]> {
        self.constant.as_deref()
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn piece_bounds(&self, idx: usize) -> (f64, f64) {
        (self.pieces[idx].start, self.pieces[idx].end)
    }

    /// Index of the piece whose interval `[l, r)` contains `t`; values
    /// outside the range map to the first or last piece.
    pub fn piece_index(&self, t: f64) -> usize {
        self.pieces
            .partition_point(|p| p.start <= t)
            .saturating_sub(1)
    }

    /// Index of the piece immediately to the left of `t`.
    pub fn piece_index_left(&self, t: f64) -> usize {
        self.pieces
            .partition_point(|p| p.start < t)
            .saturating_sub(1)
    }

    /// Evaluates piece `idx` (or its analytic extension) at `t`.
    pub fn eval_piece(&self, idx: usize, t: f64, out: &mut [f64]) {
        (self.pieces[idx].f)(t, out)
    }

    /// Evaluates the history at `t`, which must lie in `[start, t0]` up to
    /// the time tolerance.
    pub fn eval(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (lo, hi) = (self.start(), self.end());
        if t < lo - crate::time_tol(lo) || t > hi + crate::time_tol(hi) {
            return Err(Error::OutOfRange { t, lo, hi });
        }
        self.eval_piece(self.piece_index(t), t, out);
        Ok(())
    }

    pub fn value(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval(t, &mut out)?;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_uses_half_open_pieces() {
        let zero: HistoryFn = Arc::new(|_, o: &mut [f64]| o[0] = 0.0);
        let one: HistoryFn = Arc::new(|_, o: &mut [f64]| o[0] = 1.0);
        let h = HistoryFunction::piecewise(
            1,
            -3.0,
            0.0,
            vec![zero, one],
            vec![Discontinuity { t: -1.0, order: -1 }],
        )
        .unwrap();
        assert_eq!(h.value(-1.5).unwrap(), vec![0.0]);
        assert_eq!(h.value(-1.0).unwrap(), vec![1.0]);
        assert_eq!(h.value(0.0).unwrap(), vec![1.0]);
        assert_eq!(h.piece_index_left(-1.0), 0);
        assert!(h.value(-3.5).is_err());
    }

    #[test]
    fn rejects_unordered_breaks() {
        let f: HistoryFn = Arc::new(|_, o: &mut [f64]| o[0] = 0.0);
        let r = HistoryFunction::piecewise(
            1,
            -1.0,
            0.0,
            vec![f.clone(), f],
            vec![Discontinuity { t: 0.5, order: 0 }],
        );
        assert!(r.is_err());
    }
}
