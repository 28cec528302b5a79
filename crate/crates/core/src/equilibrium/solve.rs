//! Scalar root finding and maximisation used by the equilibrium solvers.

use crate::error::{Error, Result};

pub(crate) const DAMPING: f64 = 0.5;
pub(crate) const START: f64 = 0.1;
pub(crate) const MAX_ITERATIONS: usize = 500;
pub(crate) const BRACKET: (f64, f64) = (1e-6, 1.0 - 1e-6);

/// Acceptance threshold on `|τ − rhs(τ)|`.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Solves `τ = rhs(τ)` on `(0, 1)` for a non-increasing `rhs`.
///
/// Damped iteration `τ ← (1 − λ)τ + λ·rhs(τ)` from `τ = 0.1`; as soon as the
/// residual stops shrinking (or the cap is hit) it falls back to bisection on
/// `τ − rhs(τ)` over `[1e-6, 1 − 1e-6]`.
pub(crate) fn fixed_point<F: Fn(f64) -> f64>(rhs: F) -> Result<f64> {
    let mut tau = START;
    let mut residual = (tau - rhs(tau)).abs();
    for _ in 0..MAX_ITERATIONS {
        if residual < 1e-15 {
            return Ok(tau);
        }
        let next = (1.0 - DAMPING) * tau + DAMPING * rhs(tau);
        if !(0.0..=1.0).contains(&next) {
            break;
        }
        let next_residual = (next - rhs(next)).abs();
        if next_residual >= residual {
            break;
        }
        tau = next;
        residual = next_residual;
    }
    if residual < 1e-13 {
        return Ok(tau);
    }
    bisect_fixed_point(&rhs, residual)
}

fn bisect_fixed_point<F: Fn(f64) -> f64>(rhs: &F, last_residual: f64) -> Result<f64> {
    let g = |t: f64| t - rhs(t);
    let (mut lo, mut hi) = BRACKET;
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::NonConvergence { iterations: MAX_ITERATIONS, residual: last_residual });
    }
    let lo_negative = g_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if (gm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let residual = g(tau).abs();
    if residual < RESIDUAL_TOLERANCE {
        Ok(tau)
    } else {
        Err(Error::NonConvergence { iterations: MAX_ITERATIONS, residual })
    }
}

/// Golden-section search for the maximiser of a unimodal `f` on `[lo, hi]`,
/// stopping when the bracket is narrower than `tol`.
pub(crate) fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Bisection for the root of an increasing `h` on `[lo, hi]`.
pub(crate) fn bisect_increasing<F: FnMut(f64) -> Result<f64>>(mut h: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if h(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
