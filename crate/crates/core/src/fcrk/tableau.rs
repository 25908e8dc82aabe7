use crate::{Error, Result, Tier};

/// A polynomial in `theta`, coefficients in ascending order.
pub type Poly = Vec<f64>;

pub(crate) fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Exact rational coefficient tables, `(numerator, denominator)` pairs in
/// ascending powers of `theta` starting at `theta^0`.
type RatPoly = &'static [(i64, i64)];

fn rat(p: RatPoly) -> Poly {
    p.iter().map(|&(n, d)| n as f64 / d as f64).collect()
}

/// Butcher-type tableau of an explicit functional continuous Runge-Kutta
/// method with polynomial weights `b_i(theta)` and stage interpolants
/// `a_ij(theta)`.
#[derive(Debug, Clone)]
pub struct FcrkTableau {
    pub name: &'static str,
    pub order: usize,
    pub c: Vec<f64>,
    /// `a[i][j]` for `j < i`.
    pub a: Vec<Vec<Poly>>,
    pub b: Vec<Poly>,
    /// Weights of a lower-order formula at `theta = 1` built from the same
    /// stages, used for step-size control.
    pub embedded: Option<Vec<f64>>,
}

impl FcrkTableau {
    pub fn stages(&self) -> usize {
        self.c.len()
    }

    /// Highest power of `theta` appearing in the weights.
    pub fn degree(&self) -> usize {
        self.b.iter().map(|p| p.len() - 1).max().unwrap_or(0)
    }

    /// `a_ij(c_i)`, the coefficients defining stage `i`.
    pub fn a_at_nodes(&self) -> Vec<Vec<f64>> {
        self.a
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|p| poly_eval(p, self.c[i])).collect())
            .collect()
    }

    /// `b_i(theta)` for all `i`.
    pub fn weights_at(&self, theta: f64) -> Vec<f64> {
        self.b.iter().map(|p| poly_eval(p, theta)).collect()
    }

    fn build(
        name: &'static str,
        order: usize,
        c: &[(i64, i64)],
        a: &[&[RatPoly]],
        b: &[RatPoly],
        embedded: Option<&[(i64, i64)]>,
    ) -> Self {
        let mut rows: Vec<Vec<Poly>> = vec![Vec::new()];
        rows.extend(a.iter().map(|row| row.iter().map(|p| rat(p)).collect()));
        FcrkTableau {
            name,
            order,
            c: c.iter().map(|&(n, d)| n as f64 / d as f64).collect(),
            a: rows,
            b: b.iter().map(|p| rat(p)).collect(),
            embedded: embedded.map(|e| e.iter().map(|&(n, d)| n as f64 / d as f64).collect()),
        }
    }
}

const Z: RatPoly = &[(0, 1)];
const THETA: RatPoly = &[(0, 1), (1, 1)];
// Order-2 stage interpolant on nodes {0, 1/2}: u_n + h[(theta - theta^2) k_a + theta^2 k_b].
const LIN0: RatPoly = &[(0, 1), (1, 1), (-1, 1)];
const LIN1: RatPoly = &[(0, 1), (0, 1), (1, 1)];
// Simpson-type interpolant through nodes {0, 1/2, 1}.
const SIM0: RatPoly = &[(0, 1), (1, 1), (-3, 2), (2, 3)];
const SIM1: RatPoly = &[(0, 1), (0, 1), (2, 1), (-4, 3)];
const SIM2: RatPoly = &[(0, 1), (0, 1), (-1, 2), (2, 3)];

/// Continuous forward Euler.
pub fn fcrk1() -> FcrkTableau {
    FcrkTableau::build("fcrk1", 1, &[(0, 1)], &[], &[THETA], None)
}

/// Two-stage method of order 2 (continuous Heun).
pub fn fcrk2() -> FcrkTableau {
    FcrkTableau::build(
        "fcrk2",
        2,
        &[(0, 1), (1, 1)],
        &[&[THETA]],
        &[&[(0, 1), (1, 1), (-1, 2)], &[(0, 1), (0, 1), (1, 2)]],
        Some(&[(1, 1), (0, 1)]),
    )
}

/// Four-stage method of uniform order 3: Heun's third-order method on
/// nodes `0, 1/3, 2/3` plus a first-same-as-last stage at `1` that completes
/// the cubic dense output. The endpoint quadrature is exact to degree 2 only,
/// so the order is not masked on quadrature-like problems.
pub fn fcrk3() -> FcrkTableau {
    FcrkTableau::build(
        "fcrk3",
        3,
        &[(0, 1), (1, 3), (2, 3), (1, 1)],
        &[
            &[THETA],
            &[&[(0, 1), (1, 1), (-3, 2)], &[(0, 1), (0, 1), (3, 2)]],
            &[&[(0, 1), (1, 1), (-3, 4)], Z, &[(0, 1), (0, 1), (3, 4)]],
        ],
        &[
            &[(0, 1), (1, 1), (-5, 4), (1, 2)],
            Z,
            &[(0, 1), (0, 1), (9, 4), (-3, 2)],
            &[(0, 1), (0, 1), (-1, 1), (1, 1)],
        ],
        Some(&[(-1, 2), (3, 2), (0, 1), (0, 1)]),
    )
}

/// Seven-stage method of uniform order 4.
pub fn fcrk4() -> FcrkTableau {
    FcrkTableau::build(
        "fcrk4",
        4,
        &[(0, 1), (1, 2), (1, 2), (1, 1), (1, 3), (2, 3), (1, 1)],
        &[
            &[THETA],
            &[LIN0, LIN1],
            &[LIN0, LIN1, Z],
            &[SIM0, Z, SIM1, SIM2],
            &[SIM0, Z, SIM1, SIM2, Z],
            &[SIM0, Z, SIM1, SIM2, Z, Z],
        ],
        &[
            &[(0, 1), (1, 1), (-11, 4), (3, 1), (-9, 8)],
            Z,
            Z,
            Z,
            &[(0, 1), (0, 1), (9, 2), (-15, 2), (27, 8)],
            &[(0, 1), (0, 1), (-9, 4), (6, 1), (-27, 8)],
            &[(0, 1), (0, 1), (1, 2), (-3, 2), (9, 8)],
        ],
        Some(&[(1, 6), (0, 1), (2, 3), (1, 6), (0, 1), (0, 1), (0, 1)]),
    )
}

/// Tableau for a method identifier, plus the breaking-point tier it forces.
///
/// `fcrk4-q2`, `fcrk4-q3` and `fcrk4-q4` run the order-4 method with the
/// linear, quadratic and secant-corrected breaking-point approximations.
pub fn method_by_name(name: &str) -> Result<(FcrkTableau, Option<Tier>)> {
    Ok(match name {
        "fcrk1" => (fcrk1(), None),
        "fcrk2" => (fcrk2(), None),
        "fcrk3" => (fcrk3(), None),
        "fcrk4" => (fcrk4(), None),
        "fcrk4-q2" => (fcrk4(), Some(Tier::Linear)),
        "fcrk4-q3" => (fcrk4(), Some(Tier::Quadratic)),
        "fcrk4-q4" => (fcrk4(), Some(Tier::Secant)),
        other => {
            return Err(Error::InvalidParameter {
                name: "method".into(),
                reason: format!("unknown method `{other}`"),
            })
        }
    })
}

pub const METHOD_NAMES: &[&str] = &[
    "fcrk1", "fcrk2", "fcrk3", "fcrk4", "fcrk4-q2", "fcrk4-q3", "fcrk4-q4",
];
