//! Bisection root finders. All root maps in this crate are monotone, so
//! bisection is used throughout.

use crate::error::{Error, Result};

/// Search bracket for roots on the positive half-line: starts at
/// `[start_lo, start_hi]` and expands by doubling out to `[min, max]`.
#[derive(Debug, Clone, Copy)]
pub struct PositiveBracket {
    pub start_lo: f64,
    pub start_hi: f64,
    pub min: f64,
    pub max: f64,
    pub rel_tol: f64,
}

impl Default for PositiveBracket {
    fn default() -> Self {
        Self {
            start_lo: 1e-4,
            start_hi: 1e4,
            min: 1e-8,
            max: 1e8,
            rel_tol: 1e-10,
        }
    }
}

/// Finds the smallest `q > 0` with `f(q) >= target`, for `f` nondecreasing.
/// Bisection runs in log space with relative tolerance `rel_tol`. If `f`
/// jumps across `target`, the jump location is returned.
pub fn increasing_crossing<F>(f: F, target: f64, bracket: &PositiveBracket) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    Ok(crossing_bracket(f, target, bracket)?.1)
}

/// As [`increasing_crossing`], returning the final `(lo, hi)` with
/// `f(lo) < target <= f(hi)`, so callers can see a jump across the root.
pub fn crossing_bracket<F>(mut f: F, target: f64, bracket: &PositiveBracket) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut lo = bracket.start_lo;
    let mut hi = bracket.start_hi;
    while f(lo)? >= target {
        if lo <= bracket.min {
            return Err(Error::Range(format!(
                "target {target} already reached at the lower search limit {}",
                bracket.min
            )));
        }
        hi = lo;
        lo = (lo / 2.0).max(bracket.min);
    }
    while f(hi)? < target {
        if hi >= bracket.max {
            return Err(Error::Range(format!(
                "target {target} not reached at the upper search limit {}",
                bracket.max
            )));
        }
        lo = hi;
        hi = (hi * 2.0).min(bracket.max);
    }
    while hi / lo - 1.0 > bracket.rel_tol {
        let mid = (lo * hi).sqrt();
        if f(mid)? >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Plain bisection on `[lo, hi]` for a nondecreasing `f`, returning the point
/// where `f` crosses `target` to absolute tolerance `tol`.
pub fn bisect_increasing<F: FnMut(f64) -> f64>(mut f: F, target: f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
