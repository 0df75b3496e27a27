//! Memoryless output channels acting on codeword components.
//!
//! The binary channels only look at `sign(z)` (with `sign(0) = +1`), so each
//! output symbol `y` carries a pair of weights `(P(y | z > 0), P(y | z < 0))`
//! and every Gaussian integral reduces to normal tails.

use std::fmt;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::special::{ln_npdf, ln_q_tail, log_add_exp, npdf, q_tail, xlogx};
use crate::{Error, Result};

/// Lower bound on posterior variances.
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Channel {
    /// Binary erasure: outputs `sign(z)` or the erasure symbol `0`.
    Bec { epsilon: f64 },
    /// Binary symmetric: flips `sign(z)` with probability `epsilon`.
    Bsc { epsilon: f64 },
    /// Z channel: `-1` inputs turn into `+1` with probability `epsilon`.
    Zc { epsilon: f64 },
    /// Additive Gaussian noise of variance `1/snr`.
    Awgn { snr: f64 },
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Bec { epsilon } => write!(f, "BEC({epsilon})"),
            Channel::Bsc { epsilon } => write!(f, "BSC({epsilon})"),
            Channel::Zc { epsilon } => write!(f, "ZC({epsilon})"),
            Channel::Awgn { snr } => write!(f, "AWGN({snr})"),
        }
    }
}

const SIGN_ALPHABET: [f64; 2] = [-1.0, 1.0];
const ERASURE_ALPHABET: [f64; 3] = [-1.0, 0.0, 1.0];

fn sign(z: f64) -> f64 {
    if z < 0.0 {
        -1.0
    } else {
        1.0
    }
}

impl Channel {
    pub fn bec(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon).map(|epsilon| Channel::Bec { epsilon })
    }

    pub fn bsc(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon).map(|epsilon| Channel::Bsc { epsilon })
    }

    pub fn zc(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon).map(|epsilon| Channel::Zc { epsilon })
    }

    pub fn awgn(snr: f64) -> Result<Self> {
        if snr > 0.0 && snr.is_finite() {
            Ok(Channel::Awgn { snr })
        } else {
            Err(Error::InvalidParameter(format!("snr must be positive, got {snr}")))
        }
    }

    /// Short lowercase name used in CSV output.
    pub fn kind(&self) -> &'static str {
        match self {
            Channel::Bec { .. } => "bec",
            Channel::Bsc { .. } => "bsc",
            Channel::Zc { .. } => "zc",
            Channel::Awgn { .. } => "awgn",
        }
    }

    /// `epsilon` for binary channels, `snr` for AWGN.
    pub fn parameter(&self) -> f64 {
        match *self {
            Channel::Bec { epsilon } | Channel::Bsc { epsilon } | Channel::Zc { epsilon } => epsilon,
            Channel::Awgn { snr } => snr,
        }
    }

    pub fn is_binary(&self) -> bool {
        !matches!(self, Channel::Awgn { .. })
    }

    /// Finite output alphabet, `None` for AWGN.
    pub fn alphabet(&self) -> Option<&'static [f64]> {
        match self {
            Channel::Bec { .. } => Some(&ERASURE_ALPHABET),
            Channel::Bsc { .. } | Channel::Zc { .. } => Some(&SIGN_ALPHABET),
            Channel::Awgn { .. } => None,
        }
    }

    /// `(P(y | z > 0), P(y | z < 0))` for binary channels.
    pub fn sign_weights(&self, y: f64) -> Option<(f64, f64)> {
        let e = match *self {
            Channel::Awgn { .. } => return None,
            Channel::Bec { epsilon } | Channel::Bsc { epsilon } | Channel::Zc { epsilon } => epsilon,
        };
        let w = match (self, y) {
            (Channel::Bec { .. }, 1.0) => (1.0 - e, 0.0),
            (Channel::Bec { .. }, -1.0) => (0.0, 1.0 - e),
            (Channel::Bec { .. }, 0.0) => (e, e),
            (Channel::Bsc { .. }, 1.0) => (1.0 - e, e),
            (Channel::Bsc { .. }, -1.0) => (e, 1.0 - e),
            (Channel::Zc { .. }, 1.0) => (1.0, e),
            (Channel::Zc { .. }, -1.0) => (0.0, 1.0 - e),
            _ => (0.0, 0.0),
        };
        Some(w)
    }

    /// `P_out(y | z)`; a density in `y` for AWGN.
    pub fn likelihood(&self, y: f64, z: f64) -> f64 {
        match *self {
            Channel::Awgn { snr } => {
                let s = snr.sqrt();
                s * npdf((y - z) * s)
            }
            _ => {
                let (a, b) = self.sign_weights(y).unwrap_or((0.0, 0.0));
                if z < 0.0 {
                    b
                } else {
                    a
                }
            }
        }
    }

    /// Samples `y_μ ~ P_out(· | z_μ)` componentwise.
    pub fn transmit(&self, z: &[f64], seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        z.iter()
            .map(|&z| match *self {
                Channel::Bec { epsilon } => {
                    if rng.random::<f64>() < epsilon {
                        0.0
                    } else {
                        sign(z)
                    }
                }
                Channel::Bsc { epsilon } => {
                    if rng.random::<f64>() < epsilon {
                        -sign(z)
                    } else {
                        sign(z)
                    }
                }
                Channel::Zc { epsilon } => {
                    let flip = rng.random::<f64>() < epsilon;
                    if sign(z) > 0.0 || flip {
                        1.0
                    } else {
                        -1.0
                    }
                }
                Channel::Awgn { snr } => {
                    let n: f64 = rng.sample(StandardNormal);
                    z + n / snr.sqrt()
                }
            })
            .collect()
    }

    /// `ln Z_out(y; ω, v)` with `Z_out = ∫ dz P_out(y|z) N(z; ω, v)`.
    pub fn ln_z_out(&self, y: f64, omega: f64, v: f64) -> Result<f64> {
        check_variance(v)?;
        Ok(match *self {
            Channel::Awgn { snr } => {
                let total = v + 1.0 / snr;
                ln_npdf((y - omega) / total.sqrt()) - 0.5 * total.ln()
            }
            _ => {
                let (a, b) = self.sign_weights(y).unwrap_or((0.0, 0.0));
                let t = omega / v.sqrt();
                log_add_exp(ln_weight(a) + ln_q_tail(-t), ln_weight(b) + ln_q_tail(t))
            }
        })
    }

    pub fn z_out(&self, y: f64, omega: f64, v: f64) -> Result<f64> {
        match self.sign_weights(y) {
            Some((a, b)) => {
                check_variance(v)?;
                let t = omega / v.sqrt();
                Ok(a * q_tail(-t) + b * q_tail(t))
            }
            None => self.ln_z_out(y, omega, v).map(f64::exp),
        }
    }

    /// `∂_ω ln Z_out(y; ω, v)`.
    pub fn d_omega_ln_z_out(&self, y: f64, omega: f64, v: f64) -> Result<f64> {
        check_variance(v)?;
        match *self {
            Channel::Awgn { snr } => Ok((y - omega) / (v + 1.0 / snr)),
            _ => {
                let (a, b) = self.sign_weights(y).unwrap_or((0.0, 0.0));
                let sv = v.sqrt();
                Ok(tilt_ratio(a, b, omega / sv)? / sv)
            }
        }
    }

    /// Mean and variance of `z` under `P_out(y|z) N(z; p, 1/τ)`.
    pub fn posterior_z_moments(&self, y: f64, p: f64, tau: f64) -> Result<(f64, f64)> {
        if !(tau > 0.0) {
            return Err(Error::InvalidParameter(format!("precision must be positive, got {tau}")));
        }
        match *self {
            Channel::Awgn { snr } => {
                let prec = tau + snr;
                Ok(((tau * p + snr * y) / prec, (1.0 / prec).max(VARIANCE_FLOOR)))
            }
            _ => {
                let (a, b) = self.sign_weights(y).unwrap_or((0.0, 0.0));
                if a == 0.0 && b == 0.0 {
                    return Err(Error::ZeroEvidence { index: 0, y });
                }
                let s = 1.0 / tau.sqrt();
                let t = p / s;
                let r = tilt_ratio(a, b, t)?;
                let mean = p + s * r;
                let var = s * s * (1.0 - r * (t + r));
                Ok((mean, var.max(VARIANCE_FLOOR)))
            }
        }
    }

    /// Capacity in bits per channel use for equiprobable signs.
    pub fn capacity(&self) -> Result<f64> {
        let ys = self
            .alphabet()
            .ok_or_else(|| Error::UnsupportedChannel { operation: "capacity", channel: self.to_string() })?;
        let nats: f64 = ys
            .iter()
            .map(|&y| {
                let (a, b) = self.sign_weights(y).unwrap_or((0.0, 0.0));
                0.5 * (xlogx(a) + xlogx(b)) - xlogx(0.5 * (a + b))
            })
            .sum();
        Ok(nats / std::f64::consts::LN_2)
    }

    /// `E_z Σ_y P_out(y|z) ln P_out(y|z)` for `z ~ N(0, 1)` (binary channels).
    pub fn neg_conditional_entropy(&self) -> Result<f64> {
        let ys = self.alphabet().ok_or_else(|| Error::UnsupportedChannel {
            operation: "conditional entropy",
            channel: self.to_string(),
        })?;
        Ok(ys
            .iter()
            .map(|&y| {
                let (a, b) = self.sign_weights(y).unwrap_or((0.0, 0.0));
                0.5 * (xlogx(a) + xlogx(b))
            })
            .sum())
    }
}

fn ln_weight(w: f64) -> f64 {
    if w > 0.0 {
        w.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// `(a − b) φ(t) / (a Φ(t) + b Φ(−t))`, evaluated in the log domain.
fn tilt_ratio(a: f64, b: f64, t: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let ln_z = log_add_exp(ln_weight(a) + ln_q_tail(-t), ln_weight(b) + ln_q_tail(t));
    if ln_z == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidence { index: 0, y: t });
    }
    Ok((a - b) * (ln_npdf(t) - ln_z).exp())
}

fn check_epsilon(e: f64) -> Result<f64> {
    if (0.0..1.0).contains(&e) {
        Ok(e)
    } else {
        Err(Error::InvalidParameter(format!("epsilon must be in [0, 1), got {e}")))
    }
}

fn check_variance(v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("variance must be positive, got {v}")))
    }
}
