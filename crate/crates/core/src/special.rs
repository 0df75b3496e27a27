//! Gaussian special functions used across the channel and replica code.

use std::f64::consts::{PI, SQRT_2};

use libm::erfc;

/// ln √(2π)
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Beyond this argument the Gaussian tail is evaluated through the Mills
/// ratio instead of `erfc`, which keeps relative accuracy in the far tail.
const TAIL_SWITCH: f64 = 8.0;

/// Standard normal density.
#[inline]
pub fn npdf(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * PI).sqrt()
}

/// ln of the standard normal density.
#[inline]
pub fn ln_npdf(t: f64) -> f64 {
    -0.5 * t * t - LN_SQRT_2PI
}

/// Mills ratio Q(t)/φ(t) for t ≥ 0, a scaled complementary error function.
pub fn mills_ratio(t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if t < TAIL_SWITCH {
        return 0.5 * erfc(t / SQRT_2) / npdf(t);
    }
    // Laplace continued fraction t + 1/(t + 2/(t + 3/(t + ...))), converges fast here.
    let mut acc = t;
    for k in (1..=60).rev() {
        acc = t + k as f64 / acc;
    }
    1.0 / acc
}

/// Gaussian tail Q(t) = P(Z > t).
pub fn q_tail(t: f64) -> f64 {
    if t > TAIL_SWITCH {
        npdf(t) * mills_ratio(t)
    } else {
        0.5 * erfc(t / SQRT_2)
    }
}

/// ln Q(t), accurate for arbitrarily large positive t.
pub fn ln_q_tail(t: f64) -> f64 {
    if t > TAIL_SWITCH {
        ln_npdf(t) + mills_ratio(t).ln()
    } else if t < -TAIL_SWITCH {
        (-q_tail(-t)).ln_1p()
    } else {
        (0.5 * erfc(t / SQRT_2)).ln()
    }
}

/// Standard normal cdf Φ(t) = Q(−t).
#[inline]
pub fn ncdf(t: f64) -> f64 {
    q_tail(-t)
}

/// ln(e^a + e^b) without overflow.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// ln Σ exp(v_i) with max subtraction.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// x ln x with the convention 0 ln 0 = 0.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}
