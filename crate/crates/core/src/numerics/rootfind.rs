//! Bracketed scalar root finding and 1-D maximisation.

use crate::error::Error;
use crate::Result;

/// Newton iteration safeguarded by a shrinking bracket.
///
/// `f_df` returns (f(x), f'(x)); the root of f is sought inside [lo, hi] with
/// f(lo) <= 0 <= f(hi) (f increasing through the root). Whenever a Newton step
/// leaves the bracket or fails to shrink it fast enough, a bisection step is
/// taken instead, so convergence is guaranteed.
///
/// Terminates when |f(x)| <= f_tol or the bracket is below x_tol wide.
pub fn newton_bracketed(
    f_df: impl Fn(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    f_tol: f64,
) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    let (flo, _) = f_df(lo);
    if flo > 0.0 {
        // Root at or before lo; caller guaranteed monotonicity.
        return Ok(lo);
    }
    let (fhi, _) = f_df(hi);
    if fhi < 0.0 {
        return Err(Error::numerical(format!(
            "root not bracketed: f({lo:e}) = {flo:e}, f({hi:e}) = {fhi:e}"
        )));
    }

    let mut x = 0.5 * (lo + hi);
    // Step-halving safeguard: accept a Newton step only while steps keep
    // shrinking geometrically, otherwise bisect. This keeps one-sided
    // approaches (for example f with a flat inflection at the root) from
    // stalling the bracket.
    let mut dx_old = hi - lo;
    for _ in 0..200 {
        let (fx, dfx) = f_df(x);
        if fx.abs() <= f_tol {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= x_tol {
            return Ok(0.5 * (lo + hi));
        }
        let step = if dfx > 0.0 { fx / dfx } else { f64::NAN };
        let newton = x - step;
        if step.is_finite() && newton > lo && newton < hi && step.abs() < 0.5 * dx_old {
            dx_old = step.abs();
            x = newton;
        } else {
            dx_old = 0.5 * (hi - lo);
            x = 0.5 * (lo + hi);
        }
    }
    Err(Error::numerical(format!(
        "root iteration did not converge in [{lo:e}, {hi:e}]"
    )))
}

/// Plain bisection for a monotone increasing f with f(lo) <= 0 <= f(hi).
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, x_tol: f64) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    if f(lo) > 0.0 {
        return Ok(lo);
    }
    if f(hi) < 0.0 {
        return Err(Error::numerical("bisection: root not bracketed".to_string()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol {
            return Ok(mid);
        }
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section refinement of a local maximum of f inside [lo, hi].
pub fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, x_tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > x_tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn newton_finds_cubic_root() {
        let f = |x: f64| (x * x * x - 2.0, 3.0 * x * x);
        let r = newton_bracketed(f, 0.0, 4.0, 1e-15, 1e-15).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), max_relative = 1e-14);
    }

    #[test]
    fn newton_survives_flat_derivative() {
        // f' vanishes at 0; safeguarded iteration must still converge.
        let f = |x: f64| (x * x * x, 3.0 * x * x);
        let r = newton_bracketed(f, -1.0, 2.0, 1e-14, 0.0).unwrap();
        assert!(r.abs() < 1e-13);
    }

    #[test]
    fn bisect_monotone() {
        let r = bisect(|x| x.sin() - 0.5, 0.0, 1.5, 1e-13).unwrap();
        assert_relative_eq!(r, 0.5f64.asin(), epsilon = 1e-12);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let m = golden_max(|x| -(x - 0.7) * (x - 0.7), 0.0, 2.0, 1e-12);
        assert_relative_eq!(m, 0.7, epsilon = 1e-10);
    }
}
