//! Principal branch of the Lambert W function.

use crate::error::{Error, Result};

/// Smallest argument in the domain of the principal branch, -1/e.
pub fn branch_point() -> f64 {
    -(-1.0f64).exp()
}

/// Solves w * exp(w) = x for the principal branch, x >= -1/e.
///
/// Halley iteration from a piecewise initial guess; the residual
/// |w e^w - x| is driven below 1e-13 * max(1, |x|).
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain("lambert_w0 needs a finite argument".into()));
    }
    let min_x = branch_point();
    if x < min_x {
        return Err(Error::Domain(format!(
            "lambert_w0 undefined for {x} < -1/e"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }

    let mut w = initial_guess(x, min_x);
    let tol = 1e-13 * x.abs().max(1.0);
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-14 {
            // Stuck at the branch point with a nonzero residual; nudge
            // inward and continue.
            w += 1e-10;
            continue;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        if !step.is_finite() {
            break;
        }
        w -= step;
        if w < -1.0 {
            w = -1.0;
        }
    }

    let residual = w * w.exp() - x;
    if residual.abs() <= 1e-12 * x.abs().max(1.0) {
        Ok(w)
    } else {
        Err(Error::Domain(format!(
            "lambert_w0 failed to converge at {x} (residual {residual:e})"
        )))
    }
}

fn initial_guess(x: f64, min_x: f64) -> f64 {
    if x < -0.25 {
        // Series around the branch point in p = sqrt(2(ex + 1)).
        let p = (2.0 * (x - min_x) * std::f64::consts::E).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 * p * p * p / 72.0
    } else if x < std::f64::consts::E {
        // Pade-like guess, exact at 0 and well inside the basin up to e.
        x / (1.0 + x)
    } else {
        let l = x.ln();
        l - l.ln()
    }
}
