//! Large-section limit of the information-theoretic threshold.
//!
//! With `α → 0` at fixed `αB / ln B`, the potential per `ln B` has two
//! candidate maxima. The perfect one is worth `J(1) / (R ln 2)`. The
//! high-error one is worth `1 + sup_q ψ(q) / (R ln 2)`, where
//!
//! ```text
//! ψ(q) = inf_{q̂} [J(q̂) − q q̂ / 2] + h(q)
//! h(q) = ½ [−E ln(Λ + λ) + Λ q − ln q − 1 + q],   E 1/(Λ + λ) = q
//! ```
//!
//! with `λ` drawn from the limiting law of nonzero eigenvalues. `h` is the
//! excess of the spectral term over the Gaussian one; it vanishes for the
//! unit law. Equating the two maxima gives `R_IT = C − Δ / ln 2` with
//! `Δ = sup ψ − J(0) ≥ 0`.

use super::output::{output_entropy, qz_update};
use super::potential::ReplicaConfig;
use super::spectrum::SpectrumKind;
use crate::channels::Channel;
use crate::ensembles::SpectralLaw;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LargeBLimit {
    /// Mutual information with uniform inputs, in bits.
    pub capacity: f64,
    pub r_it_limit: f64,
    /// Relative loss `C / R_IT − 1`.
    pub epsilon_rho: f64,
    /// Gain `Δ` of the high-error branch over the Gaussian one, in nats.
    pub gap: f64,
}

/// Excess spectral term `h(q)` of a law of nonzero eigenvalues.
pub fn spectral_excess(law: &SpectralLaw, q: f64) -> Result<f64> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("overlap must be positive, got {q}")));
    }
    let lam = solve_resolvent(law, q)?;
    let log_mean = law.expect(|l| (lam + l).ln());
    Ok(0.5 * (-log_mean + lam * q - q.ln() - 1.0 + q))
}

/// `Λ > −λ_min` with `E 1/(Λ + λ) = q` (decreasing in `Λ`).
fn solve_resolvent(law: &SpectralLaw, q: f64) -> Result<f64> {
    let floor = -law.min();
    let g = |t: f64| law.expect(|l| 1.0 / (floor + t.exp() + l)) - q;
    // Bracket in ln(Λ − floor).
    let (mut lo, mut hi) = (-40.0, 1.0);
    while g(hi) > 0.0 {
        hi += 2.0;
        if hi > 200.0 {
            return Err(Error::NoConvergence(format!("resolvent equation at q = {q}")));
        }
    }
    if g(lo) < 0.0 {
        return Err(Error::OutsideDomain(format!("q = {q} is beyond the resolvent range")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    Ok(floor + (0.5 * (lo + hi)).exp())
}

/// `inf_{q̂ ∈ [0, 1)} J(q̂) − q q̂ / 2`, attained where `q_z(q̂) = q`.
fn channel_legendre(ch: &Channel, q: f64, order: usize) -> Result<f64> {
    let j = |qh: f64| output_entropy(ch, qh, order);
    if q <= qz_update(ch, 0.0, order)? {
        return j(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0 - 1e-12);
    if qz_update(ch, hi, order)? <= q {
        return Ok(j(hi)? - 0.5 * q * hi);
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if qz_update(ch, mid, order)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let qh = 0.5 * (lo + hi);
    Ok(j(qh)? - 0.5 * q * qh)
}

/// Limiting law of nonzero eigenvalues for a spectral family, if it
/// differs from the unit law.
fn limiting_law(kind: &SpectrumKind) -> Option<&SpectralLaw> {
    match kind {
        SpectrumKind::Mp | SpectrumKind::RowOrthogonal => None,
        SpectrumKind::Custom(law) => Some(law),
    }
}

/// `R_IT` as `B → ∞` and the loss `ε_ρ`, for a family whose nonzero
/// eigenvalue law tends to the one given by `kind`.
pub fn large_b_rit(ch: &Channel, kind: &SpectrumKind, cfg: &ReplicaConfig) -> Result<LargeBLimit> {
    let order = cfg.gauss_hermite_order;
    let j0 = output_entropy(ch, 0.0, order)?;
    let j1 = output_entropy(ch, 1.0, order)?;
    let ln2 = std::f64::consts::LN_2;
    let capacity = (j1 - j0) / ln2;
    let gap = match limiting_law(kind) {
        // Both limits of Gaussian and orthogonal ensembles are the unit law.
        None => 0.0,
        Some(law) => {
            let psi = |t: f64| -> Result<f64> {
                let q = t.exp();
                Ok(channel_legendre(ch, q, order)? + spectral_excess(law, q)?)
            };
            let best = maximize(psi, -12.0, 8.0)?;
            (best - j0).max(0.0)
        }
    };
    let r_it_limit = capacity - gap / ln2;
    Ok(LargeBLimit { capacity, r_it_limit, epsilon_rho: capacity / r_it_limit - 1.0, gap })
}

/// Grid search on `[a, b]` refined by golden section.
fn maximize(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    const N: usize = 400;
    let grid: Vec<f64> = (0..=N).map(|i| a + (b - a) * i as f64 / N as f64).collect();
    let vals = grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
    let i = (0..=N).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).expect("nonempty grid");
    let (mut l, mut r) = (grid[i.saturating_sub(1)], grid[(i + 1).min(N)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = r - phi * (r - l);
        let m2 = l + phi * (r - l);
        if f(m1)? < f(m2)? {
            l = m1;
        } else {
            r = m2;
        }
    }
    Ok(f(0.5 * (l + r))?.max(vals[i]))
}
