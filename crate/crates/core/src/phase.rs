//! Unit-modulus phases expressed in turns (fractions of a full rotation).
//!
//! Every phase in the crate is routed through [`cis_turns`] so that integer
//! turn counts produce exactly `1 + 0i`. The discrete identities (central
//! characters of finite order, witness residuals) rely on that.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Reduce `t` into `[0, 1)`.
#[inline]
pub fn frac(t: f64) -> f64 {
    let r = t - t.floor();
    // t slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `exp(2 pi i t)`, exact for integer `t`.
#[inline]
pub fn cis_turns(t: f64) -> Complex64 {
    let r = frac(t);
    if r == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let (s, c) = (TAU * r).sin_cos();
    Complex64::new(c, s)
}

/// `exp(2 pi i num/den)` for an exact rational turn count.
#[inline]
pub fn cis_ratio(num: i64, den: i64) -> Complex64 {
    debug_assert!(den > 0);
    let r = num.rem_euclid(den);
    if r == 0 {
        return Complex64::new(1.0, 0.0);
    }
    cis_turns(r as f64 / den as f64)
}
