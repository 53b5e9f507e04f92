//! Bracketing root finders for monotone scalar functions.

use crate::error::{Error, Result};

pub const MAX_ITER: usize = 200;

/// Bisection on `[lo, hi]` for a function with a sign change. Stops when the
/// bracket width falls below `x_tol` (absolute) or the midpoint is exact.
pub fn bisect<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
) -> Result<f64> {
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on [{lo}, {hi}] (f = {flo:e}, {fhi:e})"
        )));
    }
    for _ in 0..MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= x_tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Err(Error::Convergence(format!(
        "bisection did not converge in {MAX_ITER} iterations on [{lo}, {hi}]"
    )))
}

/// Grows `hi` geometrically from `start` until `f(hi)` has the sign opposite
/// to `f(lo)`. Returns the bracketing upper end.
pub fn expand_upper<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    lo: f64,
    start: f64,
    factor: f64,
) -> Result<f64> {
    let s0 = f(lo)?.signum();
    let mut hi = start;
    for _ in 0..MAX_ITER {
        let v = f(hi)?;
        if v.signum() != s0 || v == 0.0 {
            return Ok(hi);
        }
        hi = lo + (hi - lo) * factor;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::Convergence(format!(
        "could not bracket a root above {lo}"
    )))
}

/// One guarded Newton step: accepted only if it stays inside `[lo, hi]`.
pub fn newton_polish(x: f64, fx: f64, dfx: f64, lo: f64, hi: f64) -> f64 {
    if dfx == 0.0 || !dfx.is_finite() || !fx.is_finite() {
        return x;
    }
    let y = x - fx / dfx;
    if y.is_finite() && y >= lo && y <= hi {
        y
    } else {
        x
    }
}

/// Illinois-modified regula falsi on a bracket with a sign change. Converges
/// superlinearly for smooth monotone `f`; stops when `|f| ≤ f_tol` or the
/// bracket is narrower than `x_tol`.
pub fn illinois<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    f_tol: f64,
) -> Result<f64> {
    let mut flo = f(lo)?;
    let mut fhi = f(hi)?;
    if flo.abs() <= f_tol {
        return Ok(lo);
    }
    if fhi.abs() <= f_tol {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on [{lo}, {hi}] (f = {flo:e}, {fhi:e})"
        )));
    }
    let mut side = 0i8;
    for _ in 0..MAX_ITER {
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = f(x)?;
        if fx.abs() <= f_tol || hi - lo <= x_tol {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::Convergence(format!(
        "regula falsi did not converge in {MAX_ITER} iterations on [{lo}, {hi}]"
    )))
}
