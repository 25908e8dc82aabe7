use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::models::ScalarThresholdParams;
use crate::{Error, Result};

/// Below this `|lambda tau|` the factor `(1 - e^{-lambda tau}) / lambda` is
/// summed as a series.
pub const SERIES_CUTOFF: f64 = 0.5;

/// Linearisation data of the scalar threshold model at a steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdLinearization {
    pub beta: f64,
    pub mu: f64,
    pub gamma: f64,
    pub tau: f64,
    pub u: f64,
    /// `g(u*)`, `g'(u*)`, `V(u*)`, `V'(u*)`.
    pub g: f64,
    pub dg: f64,
    pub v: f64,
    pub dv: f64,
}

impl ThresholdLinearization {
    pub fn from_scalar(p: &ScalarThresholdParams, u_star: f64) -> Self {
        ThresholdLinearization {
            beta: p.beta,
            mu: p.mu,
            gamma: p.gamma,
            tau: p.tau(u_star),
            u: u_star,
            g: p.g(u_star),
            dg: p.dg(u_star),
            v: p.v(u_star),
            dv: p.dv(u_star),
        }
    }

    fn gain(&self) -> f64 {
        self.beta * (-self.mu * self.tau).exp()
    }

    /// Limit of the threshold characteristic function at `lambda = 0`.
    pub fn value_at_zero(&self) -> f64 {
        self.gamma - self.gain() * (self.g * self.dv / self.v * self.mu * self.tau + self.dg)
    }
}

/// `E(lambda) = (1 - e^{-lambda tau}) / lambda` and `E'(lambda)`, with
/// `E(0) = tau`.
fn lag_integral(lambda: Complex64, tau: f64) -> (Complex64, Complex64) {
    let x = lambda * tau;
    if x.norm() < SERIES_CUTOFF {
        // E = tau sum_k (-x)^k / (k+1)!,  E' = tau^2 sum_k k (-1)^k x^{k-1} / (k+1)!
        let mut e = Complex64::new(0.0, 0.0);
        let mut de = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0); // (-x)^k
        let mut pow_prev = Complex64::new(0.0, 0.0); // (-x)^{k-1}
        let mut fact = 1.0; // (k+1)!
        for k in 0..30 {
            if k > 0 {
                fact *= (k + 1) as f64;
            }
            e += pow / fact;
            if k > 0 {
                de -= pow_prev * (k as f64) / fact;
            }
            pow_prev = pow;
            pow *= -x;
        }
        (e * tau, de * tau * tau)
    } else {
        let emx = (-x).exp();
        let e = (1.0 - emx) / lambda;
        let de = (emx * tau - e) / lambda;
        (e, de)
    }
}

/// A characteristic function `Delta(lambda)` of a linearised delay equation.
#[derive(Debug, Clone, PartialEq)]
pub enum CharacteristicFunction {
    /// `lambda - mu - sigma e^{-tau lambda}`.
    DiscreteScalar { mu: f64, sigma: f64, tau: f64 },
    /// `det(lambda I - A_0 - sum_j A_j e^{-lambda tau_j})`, matrices row-major.
    DiscreteMatrix {
        dim: usize,
        a0: Vec<f64>,
        a: Vec<Vec<f64>>,
        taus: Vec<f64>,
    },
    /// Characteristic function of the threshold model with the integral
    /// condition kept as is.
    ThresholdScalar(ThresholdLinearization),
    /// Determinant of the linearisation with the threshold condition
    /// differentiated into `tau' = 1 - V(u) / V(u(t - tau))`.
    DifferentiatedThreshold(ThresholdLinearization),
}

impl CharacteristicFunction {
    pub fn discrete_matrix(
        dim: usize,
        a0: Vec<f64>,
        a: Vec<Vec<f64>>,
        taus: Vec<f64>,
    ) -> Result<Self> {
        if a0.len() != dim * dim || a.iter().any(|m| m.len() != dim * dim) {
            return Err(Error::InvalidParameter {
                name: "A".into(),
                reason: format!("matrices must be {dim}x{dim}"),
            });
        }
        if a.len() != taus.len() {
            return Err(Error::InvalidParameter {
                name: "taus".into(),
                reason: "one delay per delayed matrix".into(),
            });
        }
        Ok(CharacteristicFunction::DiscreteMatrix { dim, a0, a, taus })
    }

    /// `Delta(0) = 0` identically, whatever the parameters.
    pub fn has_spurious_zero(&self) -> bool {
        matches!(self, CharacteristicFunction::DifferentiatedThreshold(_))
    }

    /// Largest delay; sets the seed spacing of the root search.
    pub fn max_delay(&self) -> f64 {
        match self {
            CharacteristicFunction::DiscreteScalar { tau, .. } => *tau,
            CharacteristicFunction::DiscreteMatrix { taus, .. } => {
                taus.iter().copied().fold(0.0, f64::max)
            }
            CharacteristicFunction::ThresholdScalar(l)
            | CharacteristicFunction::DifferentiatedThreshold(l) => l.tau,
        }
    }

    pub fn evaluate(&self, lambda: Complex64) -> Complex64 {
        self.eval_with_derivative(lambda).0
    }

    pub fn derivative(&self, lambda: Complex64) -> Complex64 {
        self.eval_with_derivative(lambda).1
    }

    /// `(Delta(lambda), Delta'(lambda))`.
    pub fn eval_with_derivative(&self, lambda: Complex64) -> (Complex64, Complex64) {
        match self {
            CharacteristicFunction::DiscreteScalar { mu, sigma, tau } => {
                let e = (-lambda * tau).exp() * sigma;
                (lambda - mu - e, 1.0 + e * tau)
            }
            CharacteristicFunction::DiscreteMatrix { dim, a0, a, taus } => {
                matrix_det(*dim, a0, a, taus, lambda)
            }
            CharacteristicFunction::ThresholdScalar(l) => threshold(l, lambda),
            CharacteristicFunction::DifferentiatedThreshold(l) => differentiated(l, lambda),
        }
    }
}

fn threshold(l: &ThresholdLinearization, lambda: Complex64) -> (Complex64, Complex64) {
    let k = l.gain();
    let r = l.dv / l.v;
    let emx = (-lambda * l.tau).exp();
    let (e, de) = lag_integral(lambda, l.tau);
    // (1 - e^{-lambda tau})(1 + mu / lambda) = lambda E + mu E
    let vel = (lambda + l.mu) * e;
    let dvel = e + (lambda + l.mu) * de;
    let val = lambda + l.gamma - k * (l.g * r * vel + l.dg * emx);
    let der = 1.0 - k * (l.g * r * dvel - l.dg * l.tau * emx);
    (val, der)
}

fn differentiated(l: &ThresholdLinearization, lambda: Complex64) -> (Complex64, Complex64) {
    // Linearising u' and tau' = 1 - V(u)/V(u_tau) about (u*, tau*) with
    // (u~, tau~) = e^{lambda t} (e1, e2) gives
    //   [ A11(lambda)            k g mu ] [e1]
    //   [ r (1 - e^{-lambda tau})  lambda ] [e2] = 0.
    let k = l.gain();
    let r = l.dv / l.v;
    let emx = (-lambda * l.tau).exp();
    let a11 = lambda + l.gamma - k * (l.g * r * (1.0 - emx) + l.dg * emx);
    let da11 = 1.0 - k * (l.g * r * l.tau * emx - l.dg * l.tau * emx);
    let c = k * l.g * l.mu * r;
    let val = lambda * a11 - c * (1.0 - emx);
    let der = a11 + lambda * da11 - c * l.tau * emx;
    (val, der)
}

fn matrix_det(
    dim: usize,
    a0: &[f64],
    a: &[Vec<f64>],
    taus: &[f64],
    lambda: Complex64,
) -> (Complex64, Complex64) {
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let mut dm = DMatrix::<Complex64>::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = lambda;
        dm[(i, i)] = Complex64::new(1.0, 0.0);
        for j in 0..dim {
            m[(i, j)] -= a0[i * dim + j];
        }
    }
    for (aj, &tau) in a.iter().zip(taus) {
        let e = (-lambda * tau).exp();
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] -= e * aj[i * dim + j];
                dm[(i, j)] += e * tau * aj[i * dim + j];
            }
        }
    }
    let det = m.clone().determinant();
    // d det M = sum_i det(M with row i replaced by row i of M')
    let mut der = Complex64::new(0.0, 0.0);
    for i in 0..dim {
        let mut mi = m.clone();
        mi.set_row(i, &dm.row(i));
        der += mi.determinant();
    }
    (det, der)
}
