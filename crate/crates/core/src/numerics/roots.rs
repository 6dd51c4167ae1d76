use super::Real;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct RootConfig {
    pub max_iterations: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            max_iterations: 400,
        }
    }
}

/// Root of `f` inside a sign-changing bracket `[a, b]`.
///
/// Secant steps are taken while they stay inside the bracket and keep
/// shrinking it by at least half every two iterations; otherwise the step is
/// a bisection. Stops once the bracket is no wider than `tol` or `f` hits zero.
pub fn find_root<T: Real, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> Result<T> {
    find_root_with(&mut f, a, b, tol, &RootConfig::default())
}

pub fn find_root_with<T: Real, F: FnMut(T) -> T>(
    f: &mut F,
    a: T,
    b: T,
    tol: T,
    config: &RootConfig,
) -> Result<T> {
    if !(tol > T::zero()) {
        return Err(Error::invalid("root tolerance must be positive"));
    }
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if !(flo * fhi < T::zero()) {
        return Err(Error::NoBracket {
            lo: lo.to_f64(),
            hi: hi.to_f64(),
            f_lo: flo.to_f64(),
            f_hi: fhi.to_f64(),
        });
    }
    let half = T::lit(0.5);
    let mut width_two_steps_ago = hi - lo;
    let mut width_prev = hi - lo;
    for it in 0..config.max_iterations {
        let width = hi - lo;
        if width <= tol {
            break;
        }
        let mid = lo + half * width;
        if mid <= lo || mid >= hi {
            break;
        }
        let secant = hi - fhi * (hi - lo) / (fhi - flo);
        let stalled = it >= 2 && width > half * width_two_steps_ago;
        let x = if !stalled && secant > lo && secant < hi && secant.is_finite() {
            // keep the probe away from the endpoints so the bracket keeps moving
            let guard = width * T::lit(1e-3);
            secant.max(lo + guard).min(hi - guard)
        } else {
            mid
        };
        let fx = f(x);
        if fx == T::zero() {
            return Ok(x);
        }
        if (fx < T::zero()) == (flo < T::zero()) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
        width_two_steps_ago = width_prev;
        width_prev = width;
    }
    if hi - lo > tol && lo + half * (hi - lo) > lo && lo + half * (hi - lo) < hi {
        return Err(Error::Numerical(format!(
            "root finder did not reach width {:e} in {} iterations",
            tol.to_f64(),
            config.max_iterations
        )));
    }
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}
