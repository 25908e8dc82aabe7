use num_complex::Complex64;

use super::characteristic::CharacteristicFunction;
use crate::{Error, Result};

/// Rectangle `re_min <= Re <= re_max`, `|Im| <= im_max` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

impl RootBox {
    pub fn new(re_min: f64, re_max: f64, im_max: f64) -> Result<Self> {
        if !(re_min < re_max) || !(im_max >= 0.0) || !(re_max - re_min).is_finite() {
            return Err(Error::InvalidParameter {
                name: "box".into(),
                reason: format!(
                    "need re_min < re_max and im_max >= 0, got [{re_min}, {re_max}] x {im_max}"
                ),
            });
        }
        Ok(RootBox {
            re_min,
            re_max,
            im_max,
        })
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let tol = 1e-12 * (1.0 + z.norm());
        z.re >= self.re_min - tol && z.re <= self.re_max + tol && z.im.abs() <= self.im_max + tol
    }

    fn far_outside(&self, z: Complex64) -> bool {
        let w = (self.re_max - self.re_min).max(self.im_max).max(1.0);
        !z.re.is_finite()
            || !z.im.is_finite()
            || z.re < self.re_min - w
            || z.re > self.re_max + w
            || z.im.abs() > self.im_max + w
    }
}

/// Two roots closer than this (relative to `max(1, |lambda|)`) are one root.
pub const DEDUP_TOL: f64 = 1e-8;
/// Accepted roots satisfy `|Delta(lambda)| <= RESIDUAL_TOL (1 + |lambda|)`.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRoot {
    pub lambda: Complex64,
    /// `|Delta(lambda)|`.
    pub residual: f64,
    /// `Delta'` is negligible at the root, so it is (numerically) multiple.
    pub multiple: bool,
}

/// Why Newton did not produce a root from a seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeedFailure {
    Diverged { seed: Complex64 },
    NoConvergence { seed: Complex64, last: Complex64 },
    ZeroDerivative { seed: Complex64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootSearch {
    /// Sorted by decreasing real part, then increasing imaginary part.
    pub roots: Vec<CharRoot>,
    pub failures: Vec<SeedFailure>,
}

impl RootSearch {
    pub fn rightmost(&self) -> Option<&CharRoot> {
        self.roots.first()
    }

    /// Rightmost root, skipping `lambda = 0` when `skip_zero` is set (the
    /// differentiated threshold form always has that root).
    pub fn leading(&self, skip_zero: bool) -> Option<&CharRoot> {
        self.roots
            .iter()
            .find(|r| !(skip_zero && r.lambda.norm() <= DEDUP_TOL))
    }
}

const MAX_NEWTON: usize = 100;

fn newton(
    cf: &CharacteristicFunction,
    seed: Complex64,
    bx: &RootBox,
) -> Result<Complex64, SeedFailure> {
    let mut z = seed;
    for _ in 0..MAX_NEWTON {
        let (f, df) = cf.eval_with_derivative(z);
        if f == Complex64::new(0.0, 0.0) {
            return Ok(z);
        }
        if df.norm() == 0.0 || !df.norm().is_finite() {
            return Err(SeedFailure::ZeroDerivative { seed });
        }
        let step = f / df;
        z -= step;
        if bx.far_outside(z) {
            return Err(SeedFailure::Diverged { seed });
        }
        if step.norm() <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    // Multiple roots converge linearly; accept if the residual says so.
    let r = cf.evaluate(z).norm();
    if r <= RESIDUAL_TOL * (1.0 + z.norm()) {
        Ok(z)
    } else {
        Err(SeedFailure::NoConvergence { seed, last: z })
    }
}

fn insert_root(roots: &mut Vec<CharRoot>, cf: &CharacteristicFunction, z: Complex64) {
    let close = |w: &CharRoot| (w.lambda - z).norm() <= DEDUP_TOL * z.norm().max(1.0);
    if roots.iter().any(close) {
        return;
    }
    let (f, df) = cf.eval_with_derivative(z);
    roots.push(CharRoot {
        lambda: z,
        residual: f.norm(),
        multiple: df.norm() <= 1e-6 * (1.0 + z.norm()),
    });
}

/// Seeds Newton's method on a grid over `bx` and returns the distinct roots
/// inside it that pass the residual check, at most `limit` of them (the
/// rightmost ones).
///
/// Seeds are spaced `pi / (2 tau_max)` apart in the imaginary direction and
/// at most that (and at most 1/4) in the real direction.
pub fn characteristic_roots(
    cf: &CharacteristicFunction,
    bx: &RootBox,
    limit: Option<usize>,
) -> RootSearch {
    let tau = cf.max_delay();
    let dy = if tau > 0.0 {
        std::f64::consts::FRAC_PI_2 / tau
    } else {
        0.5
    };
    let dx = dy.min(0.25);
    let nx = ((bx.re_max - bx.re_min) / dx).ceil().max(1.0) as usize;
    let ny = (bx.im_max / dy).ceil() as usize;
    let mut roots: Vec<CharRoot> = Vec::new();
    let mut failures = Vec::new();
    for i in 0..=nx {
        let x = bx.re_min + (bx.re_max - bx.re_min) * i as f64 / nx as f64;
        for j in 0..=ny {
            let y = if ny == 0 {
                0.0
            } else {
                bx.im_max * j as f64 / ny as f64
            };
            // Real coefficients: roots come in conjugate pairs, so seed the
            // upper half and reflect.
            match newton(cf, Complex64::new(x, y), bx) {
                Ok(z) => {
                    let z = if z.im.abs() <= 1e-14 * (1.0 + z.norm()) {
                        Complex64::new(z.re, 0.0)
                    } else {
                        z
                    };
                    if bx.contains(z) && cf.evaluate(z).norm() <= RESIDUAL_TOL * (1.0 + z.norm()) {
                        insert_root(&mut roots, cf, z);
                        if z.im != 0.0 {
                            insert_root(&mut roots, cf, z.conj());
                        }
                    }
                }
                Err(e) => failures.push(e),
            }
        }
    }
    roots.sort_by(|a, b| {
        b.lambda
            .re
            .total_cmp(&a.lambda.re)
            .then(a.lambda.im.total_cmp(&b.lambda.im))
    });
    if let Some(n) = limit {
        roots.truncate(n);
    }
    RootSearch { roots, failures }
}

/// Crossings with a smaller imaginary part count as real.
const HOPF_MIN_OMEGA: f64 = 1e-6;

/// A parameter value where a complex pair crosses the imaginary axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HopfPoint {
    pub param: f64,
    /// Imaginary part of the crossing pair.
    pub omega: f64,
    /// The pair moves into the right half-plane as the parameter increases.
    pub destabilising: bool,
}

fn leading_root(cf: &CharacteristicFunction, bx: &RootBox) -> Option<Complex64> {
    characteristic_roots(cf, bx, None)
        .leading(cf.has_spurious_zero())
        .map(|r| r.lambda)
}

/// Sweeps `param` over `[lo, hi]` in `steps` equal steps, tracking the
/// rightmost root of `family(param)`, and locates each sign change of its
/// real part by step halving down to `param_tol`. Crossings through a real
/// root (folds) are not reported.
pub fn hopf_scan(
    family: &dyn Fn(f64) -> Result<CharacteristicFunction>,
    lo: f64,
    hi: f64,
    steps: usize,
    bx: &RootBox,
    param_tol: f64,
) -> Result<Vec<HopfPoint>> {
    if steps == 0 || !(lo < hi) {
        return Err(Error::InvalidParameter {
            name: "scan".into(),
            reason: "need lo < hi and at least one step".into(),
        });
    }
    let at = |p: f64| -> Result<Option<Complex64>> { Ok(leading_root(&family(p)?, bx)) };
    let mut found = Vec::new();
    let mut p0 = lo;
    let mut z0 = at(p0)?;
    for k in 1..=steps {
        let p1 = lo + (hi - lo) * k as f64 / steps as f64;
        let z1 = at(p1)?;
        if let (Some(a), Some(b)) = (z0, z1) {
            if (a.re < 0.0) != (b.re < 0.0) {
                let (mut l, mut r, mut zl) = (p0, p1, a);
                let mut zm = b;
                while r - l > param_tol {
                    let m = 0.5 * (l + r);
                    match at(m)? {
                        Some(z) => {
                            zm = z;
                            if (z.re < 0.0) == (zl.re < 0.0) {
                                l = m;
                                zl = z;
                            } else {
                                r = m;
                            }
                        }
                        None => break,
                    }
                }
                if zm.im.abs() > HOPF_MIN_OMEGA {
                    found.push(HopfPoint {
                        param: 0.5 * (l + r),
                        omega: zm.im.abs(),
                        destabilising: b.re > a.re,
                    });
                }
            }
        }
        p0 = p1;
        z0 = z1;
    }
    Ok(found)
}
