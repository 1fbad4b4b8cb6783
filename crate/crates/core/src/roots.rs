//! Bracketed, safeguarded Newton solver for increasing scalar functions.

use crate::error::{Error, Result};
use crate::scalar::{f64_of, lit, Real};

const MAX_EXPAND: usize = 2200;
const MAX_BISECT: usize = 400;
const MAX_NEWTON: usize = 100;

fn split<T: Real>(a: T, b: T) -> T {
    let four = lit::<T>(4.0);
    if a > T::zero() && b > four * a {
        (a * b).sqrt()
    } else if b < T::zero() && a < four * b {
        -(a * b).sqrt()
    } else {
        a + (b - a) / lit(2.0)
    }
}

/// Moves `x` one step toward `bound`, halving the gap to a finite bound and
/// doubling the stride toward an infinite one.
fn toward<T: Real>(x: T, bound: T, stride: &mut T) -> T {
    if bound.is_finite() {
        x + (bound - x) / lit(2.0)
    } else {
        *stride = *stride * lit(2.0);
        if bound > T::zero() {
            x + *stride
        } else {
            x - *stride
        }
    }
}

/// Solves `f(x) = target` for `x` in the open interval `(lo, hi)` on which
/// `f` is strictly increasing. `f` returns the value and its derivative.
/// The search starts from the bracket guess `[a0, b0]` inside the interval.
pub(crate) fn solve_increasing<T: Real>(
    f: impl Fn(T) -> (T, T),
    target: T,
    lo: T,
    hi: T,
    a0: T,
    b0: T,
    tol: T,
) -> Result<T> {
    let conv = |msg: &str, a: T, b: T| Error::Convergence { msg: msg.to_string(), lo: f64_of(a), hi: f64_of(b) };
    let eval = |x: T| {
        let (v, dv) = f(x);
        (v - target, dv)
    };
    let (mut a, mut b) = (a0.min(b0), a0.max(b0));
    if !(a > lo && b < hi) {
        return Err(conv("initial bracket outside the search interval", a, b));
    }
    let mut da = eval(a).0;
    let mut db = if b == a { da } else { eval(b).0 };
    if !da.is_finite() || !db.is_finite() {
        return Err(conv("function undefined at the initial bracket", a, b));
    }
    if da == T::zero() {
        return Ok(a);
    }
    if db == T::zero() {
        return Ok(b);
    }
    // A probe where `f` is undefined becomes the new open bound, and the
    // search backs off toward it from the last defined point.
    let (mut lo, mut hi) = (lo, hi);
    let mut stride = T::one().max(a.abs());
    let mut count = 0;
    while da > T::zero() {
        let probe = toward(a, lo, &mut stride);
        count += 1;
        if count > MAX_EXPAND || !(probe > lo) || !(probe < a) {
            return Err(conv("no sign change toward the lower bound", probe, a));
        }
        let dp = eval(probe).0;
        if !dp.is_finite() {
            lo = probe;
            continue;
        }
        b = a;
        db = da;
        a = probe;
        da = dp;
        if da == T::zero() {
            return Ok(a);
        }
    }
    let mut stride = T::one().max(b.abs());
    count = 0;
    while db < T::zero() {
        let probe = toward(b, hi, &mut stride);
        count += 1;
        if count > MAX_EXPAND || !(probe < hi) || !(probe > b) {
            return Err(conv("no sign change toward the upper bound", b, probe));
        }
        let dp = eval(probe).0;
        if !dp.is_finite() {
            hi = probe;
            continue;
        }
        a = b;
        b = probe;
        db = dp;
        if db == T::zero() {
            return Ok(b);
        }
    }
    let coarse = lit::<T>(1e-3);
    for _ in 0..MAX_BISECT {
        let width = b - a;
        let ok = if a < T::zero() && b > T::zero() { width <= coarse } else { width <= coarse * a.abs().max(b.abs()) };
        if ok {
            break;
        }
        let m = split(a, b);
        if !(m > a && m < b) {
            break;
        }
        let dm = eval(m).0;
        if !dm.is_finite() {
            return Err(conv("function undefined inside the bracket", a, b));
        }
        if dm == T::zero() {
            return Ok(m);
        }
        if dm < T::zero() {
            a = m;
        } else {
            b = m;
        }
    }
    let eps = T::epsilon();
    let four = lit::<T>(4.0);
    let mut x = split(a, b);
    let mut best = (x, T::infinity());
    // Set once the sign change is pinned between neighbouring floats; the
    // residual is then limited by the conditioning of `f`, not the solver.
    let mut resolved = false;
    for _ in 0..MAX_NEWTON {
        let (d, dd) = eval(x);
        if !d.is_finite() {
            return Err(conv("function undefined during refinement", a, b));
        }
        if d.abs() < best.1 {
            best = (x, d.abs());
        }
        if d == T::zero() {
            break;
        }
        if d < T::zero() {
            a = x;
        } else {
            b = x;
        }
        let mut next = x - d / dd;
        if !(next > a && next < b) || !next.is_finite() {
            next = split(a, b);
        }
        let small = (next - x).abs() <= four * eps * x.abs().max(T::min_positive_value());
        let narrow = b - a <= four * eps * a.abs().max(b.abs());
        x = next;
        resolved = narrow || small;
        if small || narrow {
            let d = eval(x).0;
            if d.abs() < best.1 {
                best = (x, d.abs());
            }
            break;
        }
    }
    if best.1 <= tol * T::one().max(target.abs()) || resolved {
        Ok(best.0)
    } else {
        Err(conv(&format!("residual {:e} above tolerance", f64_of(best.1)), a, b))
    }
}
