//! Principal branch of the Lambert W function.

use crate::{Error, Result};

/// `W0(x)` for `x >= -1/e`, solved by Halley iteration to full precision.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let e_inv = (-1.0f64).exp();
    if !(x >= -e_inv - 1e-16) {
        return Err(Error::Domain(format!(
            "lambert_w0 needs x >= -1/e, got {x}"
        )));
    }
    if x <= -e_inv {
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x < -0.25 {
        // Expansion about the branch point.
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        (1.0 + x).ln() * 0.75
    } else {
        let l = x.ln();
        l - l.ln()
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        let next = w - step;
        if (next - w).abs() <= 4.0 * f64::EPSILON * next.abs().max(1e-300) {
            w = next;
            break;
        }
        w = next;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_constant() {
        assert!((lambert_w0(1.0).unwrap() - 0.567_143_290_409_783_8).abs() < 1e-15);
    }

    #[test]
    fn branch_point_and_domain() {
        assert_eq!(lambert_w0(-(-1.0f64).exp()).unwrap(), -1.0);
        assert!(lambert_w0(-0.5).is_err());
        let w = lambert_w0(-0.36).unwrap();
        assert!((w * w.exp() + 0.36).abs() < 1e-15);
    }

    #[test]
    fn identity_across_range() {
        for &x in &[-0.3, -0.1, 1e-8, 0.5, 1.0, 2.0, std::f64::consts::E, 10.0] {
            let w = lambert_w0(x).unwrap();
            assert!(
                (w * w.exp() - x).abs() <= 1e-15 * x.abs().max(1.0),
                "x = {x}"
            );
        }
        assert!((lambert_w0(std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_for_large_arguments() {
        // w e^w amplifies a relative error in w by (1 + w), so the residual
        // of a correctly rounded w grows with w.
        for &x in &[1e3, 1e10, 1e100] {
            let w = lambert_w0(x).unwrap();
            let tol = 4.0 * f64::EPSILON * (1.0 + w.abs()) * x;
            assert!((w * w.exp() - x).abs() <= tol, "x = {x}");
        }
    }
}
