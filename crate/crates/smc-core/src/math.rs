//! Float helpers that resolve to std intrinsics when available and to
//! `libm` under `no_std`, plus half-period trigonometry used by the basis.

#[cfg(feature = "std")]
mod imp {
    #[inline(always)]
    pub fn sin(x: f64) -> f64 {
        x.sin()
    }
    #[inline(always)]
    pub fn cos(x: f64) -> f64 {
        x.cos()
    }
    #[inline(always)]
    pub fn exp(x: f64) -> f64 {
        x.exp()
    }
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        x.sqrt()
    }
    #[inline(always)]
    pub fn abs(x: f64) -> f64 {
        x.abs()
    }
    #[inline(always)]
    pub fn hypot(x: f64, y: f64) -> f64 {
        x.hypot(y)
    }
}

#[cfg(not(feature = "std"))]
mod imp {
    #[inline(always)]
    pub fn sin(x: f64) -> f64 {
        libm::sin(x)
    }
    #[inline(always)]
    pub fn cos(x: f64) -> f64 {
        libm::cos(x)
    }
    #[inline(always)]
    pub fn exp(x: f64) -> f64 {
        libm::exp(x)
    }
    #[inline(always)]
    pub fn sqrt(x: f64) -> f64 {
        libm::sqrt(x)
    }
    #[inline(always)]
    pub fn abs(x: f64) -> f64 {
        libm::fabs(x)
    }
    #[inline(always)]
    pub fn hypot(x: f64, y: f64) -> f64 {
        libm::hypot(x, y)
    }
}

pub(crate) use imp::{abs, cos, exp, hypot, sin, sqrt};

use core::f64::consts::PI;

/// `cos(pi * t)`, exact at integer and half-integer `t`.
///
/// The basis functions take arguments of the form `m * x / l`, so domain
/// corners, midlines, and edges land exactly on integers or half-integers.
/// Evaluating through this reduction makes the zeros of the basis gradient
/// on those sets exact in floating point instead of merely O(1e-16), which
/// in turn keeps symmetry-induced invariant sets of the closed loop exact.
pub fn cospi(t: f64) -> f64 {
    if !t.is_finite() {
        return f64::NAN;
    }
    let mut r = abs(t) % 2.0;
    if r > 1.0 {
        // Sterbenz: exact for r in (1, 2].
        r = 2.0 - r;
    }
    if r == 0.0 {
        return 1.0;
    }
    if r == 1.0 {
        return -1.0;
    }
    if r == 0.5 {
        return 0.0;
    }
    if r < 0.5 {
        cos(PI * r)
    } else {
        // Sterbenz: exact for r in [0.5, 1).
        -cos(PI * (1.0 - r))
    }
}

/// `sin(pi * t)`, exact at integer `t` and `+/-1` at half-integers.
pub fn sinpi(t: f64) -> f64 {
    if !t.is_finite() {
        return f64::NAN;
    }
    let sign_in = if t < 0.0 { -1.0 } else { 1.0 };
    let mut r = abs(t) % 2.0;
    let mut sign = sign_in;
    if r > 1.0 {
        r -= 1.0;
        sign = -sign;
    }
    if r == 0.0 || r == 1.0 {
        return 0.0;
    }
    if r == 0.5 {
        return sign;
    }
    if r > 0.5 {
        r = 1.0 - r;
    }
    sign * sin(PI * r)
}
