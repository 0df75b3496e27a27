//! Channel side of the potential, as functions of `q̂_z ∈ [0, 1)`:
//!
//! * `q_z(q̂_z) = E_ξ Σ_y Z_out (∂_ω ln Z_out)²`,
//! * `J(q̂_z) = E_ξ Σ_y Z_out ln Z_out`,
//!
//! with `Z_out = Z_out(y; √q̂_z ξ, 1 − q̂_z)`. For sign channels `Z_out`
//! depends on `t = c ξ`, `c = √(q̂_z / (1 − q̂_z))`. When `c > 1` the
//! Gaussian weight in `ξ` is narrower than the structure in `t`, so the
//! integrals are rewritten in `t` to keep the quadrature accurate up to
//! `q̂_z → 1`.

use crate::channels::Channel;
use crate::quadrature::{expect_normal, integrate_panels};
use crate::special::{ln_npdf, ln_q_tail, log_add_exp, npdf, xlogx, LN_SQRT_2PI};
use crate::{Error, Result};

/// Half-width of the `t` range where `Z_out ln Z_out` differs from its limits.
const T_RANGE: f64 = 12.0;

fn sign_rows(ch: &Channel) -> Vec<(f64, f64)> {
    ch.alphabet().expect("binary channel").iter().filter_map(|&y| ch.sign_weights(y)).collect()
}

fn ln_weight(w: f64) -> f64 {
    if w > 0.0 {
        w.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `ln(a Φ(t) + b Φ(−t))`.
fn ln_z(a: f64, b: f64, t: f64) -> f64 {
    log_add_exp(ln_weight(a) + ln_q_tail(-t), ln_weight(b) + ln_q_tail(t))
}

/// `K(t) = Σ_y (a − b)² φ(t) / Z(t)`.
fn k_of(rows: &[(f64, f64)], t: f64) -> f64 {
    rows.iter()
        .filter(|(a, b)| a != b)
        .map(|&(a, b)| (a - b) * (a - b) * (ln_npdf(t) - ln_z(a, b, t)).exp())
        .sum()
}

/// `G(t) = Σ_y Z(t) ln Z(t)`.
fn g_of(rows: &[(f64, f64)], t: f64) -> f64 {
    rows.iter()
        .map(|&(a, b)| {
            let lz = ln_z(a, b, t);
            if lz == f64::NEG_INFINITY {
                0.0
            } else {
                lz.exp() * lz
            }
        })
        .sum()
}

fn check(qh: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&qh) {
        return Err(Error::InvalidParameter(format!("q̂_z must be in [0, 1], got {qh}")));
    }
    Ok(())
}

/// `q_z` as a function of `q̂_z`; diverges as `q̂_z → 1` for binary channels.
pub fn qz_update(ch: &Channel, qh: f64, order: usize) -> Result<f64> {
    check(qh)?;
    if let Channel::Awgn { snr } = *ch {
        return Ok(snr / (1.0 + snr * (1.0 - qh)));
    }
    if qh >= 1.0 {
        return Err(Error::Saturated { qh_z: qh });
    }
    let rows = sign_rows(ch);
    let v = 1.0 - qh;
    let c = (qh / v).sqrt();
    let e = if c <= 1.0 {
        expect_normal(order, |xi| npdf(c * xi) * k_of(&rows, c * xi))
    } else {
        // E_ξ H(cξ) = E_t[K(t) e^{−t²/2c²}] / (c √2π)
        expect_normal(order, |t| k_of(&rows, t) * (-0.5 * t * t / (c * c)).exp()) / (c * LN_SQRT_2PI.exp())
    };
    Ok(e / v)
}

/// `J(q̂_z) = E_ξ Σ_y Z_out ln Z_out` (a negative entropy; for AWGN the
/// integral over `y` is a differential one).
pub fn output_entropy(ch: &Channel, qh: f64, order: usize) -> Result<f64> {
    check(qh)?;
    if let Channel::Awgn { snr } = *ch {
        let var = 1.0 - qh + 1.0 / snr;
        return Ok(-0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln());
    }
    let rows = sign_rows(ch);
    let hi: f64 = rows.iter().map(|&(a, _)| xlogx(a)).sum();
    let lo: f64 = rows.iter().map(|&(_, b)| xlogx(b)).sum();
    if qh >= 1.0 {
        return Ok(0.5 * (hi + lo));
    }
    let c = (qh / (1.0 - qh)).sqrt();
    if c <= 1.0 {
        return Ok(expect_normal(order, |xi| g_of(&rows, c * xi)));
    }
    // Step part plus the remainder against the density of t = cξ.
    let density = |t: f64| npdf(t / c) / c;
    let left = integrate_panels(-T_RANGE, 0.0, 6, 20, |t| (g_of(&rows, t) - lo) * density(t));
    let right = integrate_panels(0.0, T_RANGE, 6, 20, |t| (g_of(&rows, t) - hi) * density(t));
    Ok(0.5 * (hi + lo) + left + right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_panels;

    fn channels() -> Vec<Channel> {
        vec![Channel::bec(0.1).unwrap(), Channel::bsc(0.01).unwrap(), Channel::zc(0.05).unwrap()]
    }

    /// Brute-force oracle: Z_out and ∂_ω Z_out by quadrature in z, then a
    /// composite rule in ξ.
    fn oracle(ch: &Channel, qh: f64) -> (f64, f64) {
        let v = 1.0 - qh;
        let ys = ch.alphabet().unwrap();
        let per_xi = |xi: f64| {
            let w = qh.sqrt() * xi;
            let sd = v.sqrt();
            let mut qz = 0.0;
            let mut j = 0.0;
            for &y in ys {
                let lo = w - 14.0 * sd;
                let hi = w + 14.0 * sd;
                let split = |f: &dyn Fn(f64) -> f64| {
                    if lo < 0.0 && hi > 0.0 {
                        integrate_panels(lo, 0.0, 8, 20, f) + integrate_panels(0.0, hi, 8, 20, f)
                    } else {
                        integrate_panels(lo, hi, 16, 20, f)
                    }
                };
                let z = split(&|z| ch.likelihood(y, z) * npdf((z - w) / sd) / sd);
                let dz = split(&|z| ch.likelihood(y, z) * npdf((z - w) / sd) / sd * (z - w) / v);
                if z > 0.0 {
                    qz += dz * dz / z;
                    j += z * z.ln();
                }
            }
            (qz, j)
        };
        let qz = integrate_panels(-9.0, 9.0, 60, 20, |xi| npdf(xi) * per_xi(xi).0);
        let j = integrate_panels(-9.0, 9.0, 60, 20, |xi| npdf(xi) * per_xi(xi).1);
        (qz, j)
    }

    #[test]
    fn matches_dense_quadrature() {
        for ch in channels() {
            for &qh in &[0.0, 0.3, 0.5, 0.8] {
                let (qz, j) = oracle(&ch, qh);
                let got = qz_update(&ch, qh, 61).unwrap();
                assert!((got - qz).abs() < 1e-8 * qz.max(1.0), "{ch} {qh}: {got} vs {qz}");
                let gj = output_entropy(&ch, qh, 61).unwrap();
                assert!((gj - j).abs() < 1e-8, "{ch} {qh}: {gj} vs {j}");
            }
        }
    }

    #[test]
    fn zero_snr_closed_form() {
        let e: f64 = 0.01;
        let got = qz_update(&Channel::bsc(e).unwrap(), 0.0, 61).unwrap();
        let want = 2.0 / std::f64::consts::PI * (1.0 - 2.0 * e).powi(2);
        assert!((got - want).abs() < 1e-14);
    }

    #[test]
    fn bec_against_closed_integral() {
        // (1−ε)/(π√(1−q̂)) ∫Dz e^{−q̂z²/2} / Q(√q̂ z).
        let eps = 0.1;
        let ch = Channel::bec(eps).unwrap();
        for &qh in &[0.2, 0.6, 0.9, 0.99] {
            let f = |z: f64| npdf(z) * (-0.5 * qh * z * z).exp() / ln_q_tail(qh.sqrt() * z).exp();
            let integral = integrate_panels(-12.0, 12.0, 60, 20, f);
            let want = (1.0 - eps) / (std::f64::consts::PI * (1.0 - qh).sqrt()) * integral;
            let got = qz_update(&ch, qh, 61).unwrap();
            assert!((got - want).abs() < 1e-7 * want, "{qh}: {got} vs {want}");
        }
    }

    #[test]
    fn binary_channels_diverge_awgn_does_not() {
        for ch in channels() {
            let mut prev = qz_update(&ch, 0.9, 61).unwrap();
            for &qh in &[0.99, 0.999, 0.9999] {
                let cur = qz_update(&ch, qh, 61).unwrap();
                assert!(cur >= 2.0 * prev, "{ch} {qh}");
                prev = cur;
            }
            assert!(matches!(qz_update(&ch, 1.0, 61), Err(Error::Saturated { .. })));
        }
        let awgn = Channel::awgn(10.0).unwrap();
        assert_eq!(qz_update(&awgn, 1.0, 61).unwrap(), 10.0);
        assert!((qz_update(&awgn, 0.5, 61).unwrap() - 10.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn entropy_limits() {
        for ch in channels() {
            let j1 = output_entropy(&ch, 1.0, 61).unwrap();
            let near = output_entropy(&ch, 1.0 - 1e-10, 61).unwrap();
            assert!((j1 - near).abs() < 1e-4);
            assert!((j1 - ch.neg_conditional_entropy().unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn both_forms_agree_around_switch() {
        // c slightly below and above one must give continuous values.
        let ch = Channel::zc(0.05).unwrap();
        let a = qz_update(&ch, 0.5 - 1e-9, 61).unwrap();
        let b = qz_update(&ch, 0.5 + 1e-9, 61).unwrap();
        assert!((a - b).abs() < 1e-7);
        let a = output_entropy(&ch, 0.5 - 1e-9, 61).unwrap();
        let b = output_entropy(&ch, 0.5 + 1e-9, 61).unwrap();
        assert!((a - b).abs() < 1e-8);
    }
}
