//! Floating-point comparison helpers shared by every module.
//!
//! All distances and times are `f64`. Exact inputs are validated with
//! rational arithmetic at the file boundary; internally every geometric
//! comparison goes through these helpers so that values produced by a
//! sum of edge lengths compare consistently with the same sum done in a
//! different order.

pub const EPS: f64 = 1e-9;

#[inline]
pub fn tol(b: f64) -> f64 {
    EPS * b.abs().max(1.0)
}

#[inline]
pub fn leq(a: f64, b: f64) -> bool {
    a <= b + tol(b)
}

#[inline]
pub fn geq(a: f64, b: f64) -> bool {
    leq(b, a)
}

#[inline]
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= tol(a.abs().max(b.abs()))
}

/// `ceil(log2(x))` for `x >= 1`, robust to values a hair above a power of two.
pub fn ceil_log2(x: f64) -> u32 {
    if x <= 1.0 {
        return 0;
    }
    let mut e = 0u32;
    let mut p = 1.0f64;
    while p < x * (1.0 - 1e-12) {
        p *= 2.0;
        e += 1;
    }
    e
}

/// `log2(n)` clamped below by 1, used wherever the algorithms scale a
/// budget by a `log n` factor and a single node must not zero it out.
pub fn log2_floor1(n: usize) -> f64 {
    (n as f64).log2().max(1.0)
}
