//! Gauss-Legendre quadrature on solution pieces.

use crate::PastAccess;

const NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[lo, hi]`; exact for polynomials of
/// degree at most 9.
pub fn gauss5(lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    NODES
        .iter()
        .zip(WEIGHTS)
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

/// Composite five-point rule over `[lo, hi]` split at the sorted `knots`,
/// with each piece further divided into `sub` equal parts.
pub fn gauss5_split(
    lo: f64,
    hi: f64,
    knots: &[f64],
    sub: usize,
    mut f: impl FnMut(f64) -> f64,
) -> f64 {
    let mut total = 0.0;
    let mut a = lo;
    for &b in knots
        .iter()
        .filter(|&&k| k > lo && k < hi)
        .chain(std::iter::once(&hi))
    {
        let w = (b - a) / sub as f64;
        for s in 0..sub {
            let x0 = a + s as f64 * w;
            let x1 = if s + 1 == sub { b } else { x0 + w };
            total += gauss5(x0, x1, &mut f);
        }
        a = b;
    }
    total
}

/// `int_lo^hi g(s, u(s)) ds` over the numerical past, split at mesh points.
pub fn integrate_past(
    past: &dyn PastAccess,
    dim: usize,
    lo: f64,
    hi: f64,
    mut g: impl FnMut(f64, &[f64]) -> f64,
) -> f64 {
    let mut knots = Vec::new();
    past.knots(lo, hi, &mut knots);
    knots.sort_by(f64::total_cmp);
    let mut u = vec![0.0; dim];
    gauss5_split(lo, hi, &knots, 1, |s| {
        past.eval(s, &mut u);
        g(s, &u)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_degree_nine() {
        let v = gauss5(0.0, 2.0, |x| x.powi(9));
        assert!((v - 2f64.powi(10) / 10.0).abs() < 1e-12);
    }

    #[test]
    fn composite_matches_smooth_integral() {
        let v = gauss5_split(0.0, 3.0, &[0.5, 1.7], 4, f64::exp);
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-12);
    }
}
