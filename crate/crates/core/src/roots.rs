//! Bracketed scalar root finding (Brent).

use crate::error::{Error, Result};

/// Finds a root of `f` in `[lo, hi]`; `f(lo)` and `f(hi)` must differ in sign.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, x_tol: f64, max_iter: usize) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::RootFinding { lo, hi });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Err(Error::RootFinding { lo, hi })
}

/// Solves `g(t) = target` for an increasing `g` on `(0, inf)` by bracketing
/// in log-time from `guess`, then Brent to relative tolerance `rel_tol`.
pub fn solve_increasing<G: FnMut(f64) -> f64>(mut g: G, target: f64, guess: f64, rel_tol: f64) -> Result<f64> {
    let mut h = |u: f64| g(u.exp()) - target;
    let mut lo = if guess > 0.0 && guess.is_finite() { guess.ln() } else { 0.0 };
    let mut hi = lo;
    let mut step = 1.0;
    let f0 = h(lo);
    if f0 == 0.0 {
        return Ok(lo.exp());
    }
    if f0 > 0.0 {
        // move left
        loop {
            lo -= step;
            step *= 2.0;
            if h(lo) <= 0.0 {
                break;
            }
            if lo < -745.0 {
                return Err(Error::RootFinding { lo: lo.exp(), hi: hi.exp() });
            }
        }
    } else {
        loop {
            hi += step;
            step *= 2.0;
            if h(hi) >= 0.0 {
                break;
            }
            if hi > 709.0 {
                return Err(Error::RootFinding { lo: lo.exp(), hi: hi.exp() });
            }
        }
    }
    let u = brent(h, lo, hi, rel_tol, 400)?;
    Ok(u.exp())
}
