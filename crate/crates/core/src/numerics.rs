//! Scalar kernels: principal-branch Lambert W, bisection, and golden-section
//! line search.
//!
//! Every closed-form contract in this crate is expressed through `W0`, so the
//! evaluation here is held to a residual of about one ulp of `x`.

use std::f64::consts::E;

use crate::error::{Error, Result};

const LAMBERT_MAX_ITER: usize = 50;
const LAMBERT_REL_STEP: f64 = 1e-15;
const BISECTION_MAX_ITER: usize = 200;

/// Above this the Halley update on `w e^w` would overflow; iterate on
/// `w + ln w = ln x` instead.
const LOG_FORM_CUTOFF: f64 = 1e100;

/// Principal branch of the Lambert W function for real `x >= -1/e`.
pub fn lambert_w0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(x));
    }
    let branch_point = -1.0 / E;
    if x < branch_point {
        // allow a few ulps of slack for arguments computed as -1/e
        if x < branch_point - 4.0 * f64::EPSILON {
            return Err(Error::Domain { x });
        }
        return Ok(-1.0);
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == branch_point {
        return Ok(-1.0);
    }
    if x > LOG_FORM_CUTOFF {
        return Ok(lambert_w0_log_form(x));
    }

    let mut w = initial_guess(x);
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        if denom == 0.0 || !denom.is_finite() {
            break;
        }
        let step = f / denom;
        w -= step;
        if step.abs() <= LAMBERT_REL_STEP * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(w)
}

fn initial_guess(x: f64) -> f64 {
    if x > E {
        let l1 = x.ln();
        l1 - l1.ln()
    } else if x > -0.25 {
        x / (1.0 + x)
    } else {
        // series about the branch point
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    }
}

fn lambert_w0_log_form(x: f64) -> f64 {
    let lx = x.ln();
    let mut w = lx - lx.ln();
    for _ in 0..LAMBERT_MAX_ITER {
        // g(w) = w + ln w - ln x, g'(w) = 1 + 1/w
        let g = w + w.ln() - lx;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= LAMBERT_REL_STEP * w {
            break;
        }
    }
    w
}

/// A closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    lo: f64,
    hi: f64,
}

impl Bracket {
    /// Builds a bracket from two endpoints given in either order.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() || a == b {
            return Err(Error::InvalidBracket { lo: a, hi: b });
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        Ok(Bracket { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisection on a sign-changing bracket until its width is at most `tol`.
///
/// Returns the midpoint of the final bracket, or an exact root if one of the
/// probes lands on it.
pub fn find_root<F>(f: F, bracket: Bracket, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo.is_nan() {
        return Err(Error::NonFinite(f_lo));
    }
    if f_hi.is_nan() {
        return Err(Error::NonFinite(f_hi));
    }
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, f_lo, f_hi });
    }

    for _ in 0..BISECTION_MAX_ITER {
        let mid = lo + 0.5 * (hi - lo);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid.is_nan() {
            return Err(Error::NonFinite(f_mid));
        }
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= tol {
        Ok(lo + 0.5 * (hi - lo))
    } else {
        Err(Error::MaxIterations {
            iterations: BISECTION_MAX_ITER,
            lo,
            hi,
        })
    }
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmax, max)`. The endpoints are also probed so that a maximum
/// sitting on the boundary is not lost to the interior-only probes.
pub fn golden_section_max<F>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (a + b);
    let mut best = (mid, f(mid));
    for x in [lo.min(hi), lo.max(hi)] {
        let fx = f(x);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}
