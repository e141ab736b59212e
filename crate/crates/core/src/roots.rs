//! Bracketed scalar root finding: bisection with safeguarded secant steps.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}] (f = {f_lo}, {f_hi})")]
    NoSignChange {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("no sign change found while expanding the bracket up to {hi}")]
    ExpansionFailed { hi: f64 },
    #[error("residual {residual:e} above tolerance after {iterations} iterations")]
    NotConverged { best: f64, residual: f64, iterations: usize },
    #[error("function returned a non-finite value at {0}")]
    NotFinite(f64),
}

/// Stopping rule for [`find_root`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    /// Accept `x` once `|f(x)| <= residual`.
    pub residual: f64,
    pub max_iters: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            residual: 1e-12,
            max_iters: 200,
        }
    }
}

/// Doubles `hi` (keeping `lo` fixed) until `f` changes sign on `[lo, hi]`.
pub fn expand_bracket(
    f: impl Fn(f64) -> f64,
    lo: f64,
    mut hi: f64,
    max_doublings: usize,
) -> Result<(f64, f64), RootError> {
    let f_lo = f(lo);
    if !f_lo.is_finite() {
        return Err(RootError::NotFinite(lo));
    }
    for _ in 0..=max_doublings {
        let f_hi = f(hi);
        if !f_hi.is_finite() {
            return Err(RootError::NotFinite(hi));
        }
        if f_lo == 0.0 || f_hi == 0.0 || (f_lo < 0.0) != (f_hi < 0.0) {
            return Ok((lo, hi));
        }
        hi *= 2.0;
    }
    Err(RootError::ExpansionFailed { hi })
}

/// Root of `f` on `[lo, hi]`, which must bracket a sign change.
///
/// Secant steps are taken while they keep shrinking the bracket by at least
/// half every two iterations; otherwise the step falls back to bisection.
pub fn find_root(
    f: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: Tolerance,
) -> Result<f64, RootError> {
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if !f_lo.is_finite() {
        return Err(RootError::NotFinite(lo));
    }
    if !f_hi.is_finite() {
        return Err(RootError::NotFinite(hi));
    }
    if f_lo.abs() <= tol.residual {
        return Ok(lo);
    }
    if f_hi.abs() <= tol.residual {
        return Ok(hi);
    }
    if (f_lo < 0.0) == (f_hi < 0.0) {
        return Err(RootError::NoSignChange { lo, hi, f_lo, f_hi });
    }

    let (mut best, mut best_f) = if f_lo.abs() < f_hi.abs() {
        (lo, f_lo)
    } else {
        (hi, f_hi)
    };
    let mut width_two_back = f64::INFINITY;
    let mut width_one_back = hi - lo;
    for iteration in 0..tol.max_iters {
        let width = hi - lo;
        let secant = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        let stalled = width > 0.5 * width_two_back;
        let x = if !stalled && secant > lo && secant < hi {
            secant
        } else {
            0.5 * (lo + hi)
        };
        if x <= lo || x >= hi {
            // Bracket has collapsed to adjacent floats.
            return if best_f.abs() <= tol.residual {
                Ok(best)
            } else {
                Err(RootError::NotConverged {
                    best,
                    residual: best_f.abs(),
                    iterations: iteration,
                })
            };
        }
        let fx = f(x);
        if !fx.is_finite() {
            return Err(RootError::NotFinite(x));
        }
        if fx.abs() < best_f.abs() {
            best = x;
            best_f = fx;
        }
        if fx.abs() <= tol.residual {
            return Ok(x);
        }
        if (fx < 0.0) == (f_lo < 0.0) {
            lo = x;
            f_lo = fx;
        } else {
            hi = x;
            f_hi = fx;
        }
        width_two_back = width_one_back;
        width_one_back = width;
    }
    Err(RootError::NotConverged {
        best,
        residual: best_f.abs(),
        iterations: tol.max_iters,
    })
}
