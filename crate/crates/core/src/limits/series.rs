//! Power series in the extinction probability `p` that appear in the
//! birth-death limits:
//!
//! * `harmonic(p, j) = sum_{k>=0} p^k / (j + k) = int_0^1 (1 - p y)^{-1} y^{j-1} dy`
//! * `pair(p, j)     = sum_{k>=0} p^k / ((j + k)(j + k + 1))
//!                   = int_0^1 (1 - p y)^{-1} (1 - y) y^{j-1} dy`
//!
//! Both are summed directly for `p <= 0.999`. Above that the direct sum
//! needs too many terms, and `harmonic` switches to the closed form
//! `p^{-j} (-ln(1 - p) - sum_{i<j} p^i / i)`, with `pair = harmonic(j) - harmonic(j + 1)`.

/// Largest `p` for which the direct sums are used.
pub const DIRECT_SUM_MAX_P: f64 = 0.999;

const REL_EPS: f64 = 1e-17;

/// A truncated series and a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSum {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

/// Sums `pair(p, j)` until the tail bound
/// `p^{K+1} / ((1 - p)(j + K + 1)(j + K + 2))` is below `tol`.
pub fn pair_partial(p: f64, j: u64, tol: f64) -> PartialSum {
    debug_assert!((0.0..1.0).contains(&p) && j >= 1);
    let j = j as f64;
    let mut value = 0.0;
    let mut pk = 1.0;
    let mut k = 0usize;
    loop {
        let d = j + k as f64;
        value += pk / (d * (d + 1.0));
        pk *= p;
        let bound = pk / ((1.0 - p) * (d + 1.0) * (d + 2.0));
        k += 1;
        if bound < tol {
            return PartialSum {
                value,
                tail_bound: bound,
                terms: k,
            };
        }
    }
}

fn direct_harmonic(p: f64, j: f64) -> f64 {
    let mut value = 0.0;
    let mut pk = 1.0;
    let mut k = 0.0;
    loop {
        value += pk / (j + k);
        pk *= p;
        k += 1.0;
        if pk / ((j + k) * (1.0 - p)) < REL_EPS * value {
            return value;
        }
    }
}

fn closed_harmonic(p: f64, j: u64) -> f64 {
    let mut head = 0.0;
    let mut pi = 1.0;
    for i in 1..j {
        pi *= p;
        head += pi / i as f64;
    }
    (-(-p).ln_1p() - head) / p.powi(j as i32)
}

/// `sum_{k>=0} p^k / (j + k)`.
pub fn harmonic(p: f64, j: u64) -> f64 {
    debug_assert!((0.0..1.0).contains(&p) && j >= 1);
    if p <= DIRECT_SUM_MAX_P {
        direct_harmonic(p, j as f64)
    } else {
        closed_harmonic(p, j)
    }
}

/// `sum_{k>=0} p^k / ((j + k)(j + k + 1))` to near machine precision.
pub fn pair(p: f64, j: u64) -> f64 {
    if p <= DIRECT_SUM_MAX_P {
        let jf = j as f64;
        let first = 1.0 / (jf * (jf + 1.0));
        pair_partial(p, j, REL_EPS * first).value
    } else {
        closed_harmonic(p, j) - closed_harmonic(p, j + 1)
    }
}
