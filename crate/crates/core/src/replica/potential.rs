//! Stationary points of the replica-symmetric potential and their free
//! entropy, per section.
//!
//! The whole state is carried by the section MSE `x = 1 − B q_x`. Given `x`,
//! the channel-side overlap `y = q_z` solves `y = q_z(q̂_z(x, y))`, which
//! fixes `q̂_x` through the spherical integral; the next `x` is the prior
//! MSE at that `q̂_x`.

use std::sync::Arc;

use roots::{find_root_brent, Convergency};

use super::output::{output_entropy, qz_update};
use super::prior::{prior_table, prior_terms, Estimate, PriorTable};
use super::spectrum::{SpectrumKind, SpectrumModel};
use crate::channels::Channel;
use crate::{Error, Result};

/// Largest `q̂_z` fed to the channel side before the saturated branch.
const QHZ_MAX: f64 = 1.0 - 1e-12;
/// Stand-in for `q_z = +∞` on the first informative step.
const QZ_PROXY: f64 = 1e6;
/// Section MSE below which a binary channel is locked onto the perfect branch.
const PERFECT_MSE: f64 = 1e-10;
/// Lower end of the bracket for the channel-side overlap.
const Y_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplicaConfig {
    pub mc_samples: usize,
    pub gauss_hermite_order: usize,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
    pub fp_damping: f64,
    /// Finite stand-in for `q̂_x = +∞`.
    pub qhx_cap: f64,
    /// Monte Carlo seed; the harness sets it from the master seed.
    #[serde(skip)]
    pub seed: u64,
    /// Interpolate the prior terms from a cached table instead of fresh Monte Carlo.
    pub tabulate_prior: bool,
}

impl Default for ReplicaConfig {
    fn default() -> Self {
        Self {
            mc_samples: 100_000,
            gauss_hermite_order: 61,
            fp_tol: 1e-9,
            fp_max_iter: 2000,
            fp_damping: 0.5,
            qhx_cap: 1e8,
            seed: 0,
            tabulate_prior: true,
        }
    }
}

impl ReplicaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("replica: {what}")));
        if self.mc_samples == 0 {
            return bad("mc_samples must be positive");
        }
        if self.gauss_hermite_order < 2 {
            return bad("gauss_hermite_order must be at least 2");
        }
        if !(self.fp_tol > 0.0) || self.fp_max_iter == 0 {
            return bad("fp_tol and fp_max_iter must be positive");
        }
        if !(self.fp_damping > 0.0 && self.fp_damping <= 1.0) {
            return bad("fp_damping must be in (0, 1]");
        }
        if !(self.qhx_cap > 1.0) {
            return bad("qhx_cap must exceed 1");
        }
        Ok(())
    }
}

/// Starting point of the fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// Start from the transmitted message (`q_x = 1/B`, `q_z` huge).
    Informative,
    /// Start from no knowledge (`q_x = 0`).
    Uninformative,
}

/// A stationary point with its free entropy. On the saturated branch
/// `qh_x` and `q_z` are `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlaps {
    pub q_x: f64,
    pub q_z: f64,
    pub qh_x: f64,
    pub qh_z: f64,
    pub phi: f64,
    pub phi_stderr: f64,
    /// Section MSE `1 − B q_x`.
    pub mse: f64,
    pub saturated: bool,
    pub converged: bool,
    pub iterations: usize,
}

/// Everything that stays fixed while iterating at one rate.
pub struct Problem {
    pub channel: Channel,
    pub b: usize,
    pub rate: f64,
    alpha: f64,
    spectrum: SpectrumModel,
    prior: Option<Arc<PriorTable>>,
    cfg: ReplicaConfig,
}

struct RelTol;

impl Convergency<f64> for RelTol {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }
    fn is_converged(&mut self, a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }
    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter >= 200
    }
}

impl Problem {
    pub fn new(
        channel: Channel,
        b: usize,
        rate: f64,
        kind: SpectrumKind,
        cfg: &ReplicaConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if b < 2 {
            return Err(Error::InvalidParameter(format!("section size must be >= 2, got {b}")));
        }
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate must be positive, got {rate}")));
        }
        let alpha = (b as f64).log2() / (rate * b as f64);
        let spectrum = SpectrumModel::new(kind, alpha)?;
        let prior = cfg.tabulate_prior.then(|| prior_table(b, cfg.mc_samples, cfg.seed));
        Ok(Self { channel, b, rate, alpha, spectrum, prior, cfg: cfg.clone() })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spectrum(&self) -> &SpectrumModel {
        &self.spectrum
    }

    /// Prior MSE and `E ln Z_0` at a prior-side SNR.
    fn prior(&self, qh: f64) -> (Estimate, Estimate) {
        match &self.prior {
            Some(t) => (t.mse(qh), t.ln_z(qh)),
            None => prior_terms(qh, self.b, self.cfg.mc_samples, self.cfg.seed),
        }
    }

    fn qz(&self, qh_z: f64) -> Result<f64> {
        qz_update(&self.channel, qh_z.clamp(0.0, QHZ_MAX), self.cfg.gauss_hermite_order)
    }

    /// `(q̂_x, q̂_z)` from the spherical integral at `(x, y)`, projected.
    fn conjugates(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let f = self.spectrum.rect_spherical(x, y)?;
        let qh_x = (-2.0 * self.b as f64 * f.d_x).clamp(0.0, self.cfg.qhx_cap);
        let qh_z = (1.0 + 2.0 / self.alpha * f.d_y).clamp(0.0, 1.0);
        Ok((qh_x, qh_z))
    }

    /// Channel-side overlap consistent with the section MSE `x > 0`.
    fn solve_y(&self, x: f64) -> Result<f64> {
        if let SpectrumKind::Mp = self.spectrum.kind() {
            return self.qz(1.0 - x);
        }
        let y_max = self.spectrum.y_max(x);
        let gap = |y: f64| -> Result<f64> {
            let (_, qh_z) = self.conjugates(x, y)?;
            Ok(self.qz(qh_z)? - y)
        };
        if y_max.is_finite() && gap(y_max)? >= 0.0 {
            return Ok(y_max);
        }
        let hi = if y_max.is_finite() { y_max } else { QZ_PROXY.max(self.qz(1.0 - x)? * 2.0) };
        let mut failure = None;
        let t = find_root_brent(
            Y_FLOOR.ln(),
            hi.ln(),
            |t: f64| match gap(t.exp().min(hi)) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            &mut RelTol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        t.map(|t| t.exp().min(hi))
            .map_err(|e| Error::NoConvergence(format!("channel-side overlap at mse {x}: {e:?}")))
    }

    fn perfect(&self, iterations: usize) -> Result<Overlaps> {
        Ok(Overlaps {
            q_x: 1.0 / self.b as f64,
            q_z: f64::INFINITY,
            qh_x: f64::INFINITY,
            qh_z: 1.0,
            phi: self.perfect_free_entropy()?,
            phi_stderr: 0.0,
            mse: 0.0,
            saturated: true,
            converged: true,
            iterations,
        })
    }

    /// Free entropy of the perfect-decoding branch of a binary channel.
    pub fn perfect_free_entropy(&self) -> Result<f64> {
        Ok(self.alpha * self.b as f64 * self.channel.neg_conditional_entropy()?)
    }

    /// Free entropy at a non-saturated point given `x` and `y`.
    fn free_entropy_at(&self, x: f64, y: f64) -> Result<(f64, f64, f64, f64)> {
        let b = self.b as f64;
        let (qh_x, qh_z) = self.conjugates(x, y)?;
        let (_, ln_z) = self.prior(qh_x);
        let f = self.spectrum.rect_spherical(x, y)?;
        let j = output_entropy(&self.channel, qh_z, self.cfg.gauss_hermite_order)?;
        let phi = ln_z.mean - 0.5 * (1.0 - x) * qh_x
            + self.alpha * (b * j - 0.5 * b * y * qh_z)
            + b * f.value
            + 0.5 * self.alpha * b * y;
        Ok((phi, ln_z.stderr, qh_x, qh_z))
    }

    fn finish(&self, x: f64, y: f64, converged: bool, iterations: usize) -> Result<Overlaps> {
        let (phi, phi_stderr, qh_x, qh_z) = self.free_entropy_at(x, y)?;
        Ok(Overlaps {
            q_x: (1.0 - x) / self.b as f64,
            q_z: y,
            qh_x,
            qh_z,
            phi,
            phi_stderr,
            mse: x,
            saturated: false,
            converged,
            iterations,
        })
    }

    /// Iterate the stationary equations from `init`.
    pub fn fixed_point(&self, init: Init) -> Result<Overlaps> {
        let x0 = match init {
            Init::Uninformative => 1.0,
            Init::Informative => {
                // One step from q_x = 1/B with a huge q_z.
                let y0 = if self.channel.is_binary() { QZ_PROXY } else { self.qz(1.0)? };
                let (qh_x, _) = self.conjugates(0.0, y0)?;
                self.prior(qh_x).0.mean
            }
        };
        self.fixed_point_from(x0)
    }

    /// Iterate the stationary equations from section MSE `x0 ∈ [0, 1]`.
    pub fn fixed_point_from(&self, x0: f64) -> Result<Overlaps> {
        if !(0.0..=1.0).contains(&x0) {
            return Err(Error::InvalidParameter(format!("initial mse must be in [0, 1], got {x0}")));
        }
        let binary = self.channel.is_binary();
        let d = self.cfg.fp_damping;
        let mut x = x0;
        for k in 1..=self.cfg.fp_max_iter {
            if binary && x < PERFECT_MSE {
                return self.perfect(k);
            }
            let y = if x > 0.0 { self.solve_y(x)? } else { self.qz(1.0)? };
            let (qh_x, _) = self.conjugates(x, y)?;
            if binary && qh_x >= self.cfg.qhx_cap {
                return self.perfect(k);
            }
            let next = self.prior(qh_x).0.mean.clamp(0.0, 1.0);
            if !next.is_finite() {
                return Err(Error::NonFinite { iteration: k, block: "prior mse" });
            }
            let change = (next - x).abs();
            x = (1.0 - d) * x + d * next;
            // Relative for small MSE, so a branch decaying to zero reaches the lock.
            if change < self.cfg.fp_tol * x.max(1e-3) {
                let y = if x > 0.0 { self.solve_y(x)? } else { self.qz(1.0)? };
                return self.finish(x, y, true, k);
            }
        }
        let y = self.solve_y(x.max(f64::MIN_POSITIVE))?;
        self.finish(x, y, false, self.cfg.fp_max_iter)
    }
}

/// Stationary point at rate `rate` from the given initialization.
pub fn fixed_point(
    rate: f64,
    b: usize,
    ch: &Channel,
    kind: &SpectrumKind,
    init: Init,
    cfg: &ReplicaConfig,
) -> Result<Overlaps> {
    Problem::new(*ch, b, rate, kind.clone(), cfg)?.fixed_point(init)
}

/// Informative-branch section MSE, the error floor.
pub fn error_floor(
    rate: f64,
    b: usize,
    ch: &Channel,
    kind: &SpectrumKind,
    cfg: &ReplicaConfig,
) -> Result<f64> {
    Ok(fixed_point(rate, b, ch, kind, Init::Informative, cfg)?.mse)
}

/// Phase at a rate, from the two branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Easy,
    Hard,
    Impossible,
}

impl Phase {
    pub fn as_str(&self) -> &'static str {
        match self {
            Phase::Easy => "easy",
            Phase::Hard => "hard",
            Phase::Impossible => "impossible",
        }
    }
}

/// Both branches at one rate and the resulting phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub rate: f64,
    pub informative: Overlaps,
    pub uninformative: Overlaps,
    pub phase: Phase,
}

/// Relative MSE gap above which the two branches count as distinct.
const DISTINCT: f64 = 1e-6;

fn distinct(un: &Overlaps, inf: &Overlaps) -> bool {
    un.mse - inf.mse > DISTINCT * un.mse.max(1e-300) && un.mse > DISTINCT
}

pub fn analyze_rate(
    rate: f64,
    b: usize,
    ch: &Channel,
    kind: &SpectrumKind,
    cfg: &ReplicaConfig,
) -> Result<RatePoint> {
    let p = Problem::new(*ch, b, rate, kind.clone(), cfg)?;
    let informative = p.fixed_point(Init::Informative)?;
    let uninformative = p.fixed_point(Init::Uninformative)?;
    let phase = if !distinct(&uninformative, &informative) {
        Phase::Easy
    } else if uninformative.phi < informative.phi {
        Phase::Hard
    } else {
        Phase::Impossible
    };
    Ok(RatePoint { rate, informative, uninformative, phase })
}

/// Algorithmic and information-theoretic thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub r_gvamp: f64,
    pub r_it: f64,
    /// Uninformative MSE just below and just above `r_gvamp`; a jump of
    /// several orders of magnitude confirms the transition is discontinuous.
    pub mse_below: f64,
    pub mse_above: f64,
}

/// Bisection width on the rate axis.
pub const THRESHOLD_WIDTH: f64 = 1e-3;

/// Locate both thresholds inside `[r_lo, r_hi]` by bisection.
pub fn thresholds(
    ch: &Channel,
    b: usize,
    kind: &SpectrumKind,
    r_lo: f64,
    r_hi: f64,
    cfg: &ReplicaConfig,
) -> Result<Thresholds> {
    if !(0.0 < r_lo && r_lo < r_hi) {
        return Err(Error::InvalidParameter(format!("bad rate range [{r_lo}, {r_hi}]")));
    }
    let at = |r: f64| analyze_rate(r, b, ch, kind, cfg);
    let lo = at(r_lo)?;
    let hi = at(r_hi)?;
    if lo.phase != Phase::Easy {
        return Err(Error::Bracket(format!("rate {r_lo} is not in the easy phase")));
    }
    if hi.phase != Phase::Impossible {
        return Err(Error::Bracket(format!("rate {r_hi} is not in the impossible phase")));
    }
    let (mut a, mut c) = (lo, hi);
    while c.rate - a.rate > THRESHOLD_WIDTH {
        let mid = at(0.5 * (a.rate + c.rate))?;
        if mid.phase == Phase::Easy {
            a = mid;
        } else {
            c = mid;
        }
    }
    let r_gvamp = 0.5 * (a.rate + c.rate);
    let (mse_below, mse_above) = (a.uninformative.mse, c.uninformative.mse);
    // The IT threshold lies above the algorithmic one.
    let (mut a, mut c) = (c, hi);
    if a.phase == Phase::Impossible {
        return Ok(Thresholds { r_gvamp, r_it: r_gvamp, mse_below, mse_above });
    }
    while c.rate - a.rate > THRESHOLD_WIDTH {
        let mid = at(0.5 * (a.rate + c.rate))?;
        if mid.phase == Phase::Impossible {
            c = mid;
        } else {
            a = mid;
        }
    }
    Ok(Thresholds { r_gvamp, r_it: 0.5 * (a.rate + c.rate), mse_below, mse_above })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::SpectralLaw;

    fn cfg() -> ReplicaConfig {
        ReplicaConfig { mc_samples: 50_000, ..ReplicaConfig::default() }
    }

    #[test]
    fn easy_phase_branches_coincide() {
        let ch = Channel::bec(0.1).unwrap();
        let p = analyze_rate(0.3, 2, &ch, &SpectrumKind::Mp, &cfg()).unwrap();
        assert_eq!(p.phase, Phase::Easy);
        assert!(p.uninformative.mse < 1e-6 && p.informative.mse < 1e-6);
        assert!((p.uninformative.phi - p.informative.phi).abs() < 1e-9);
    }

    #[test]
    fn hard_phase_has_two_branches() {
        let ch = Channel::bsc(0.01).unwrap();
        let p = analyze_rate(0.72, 8, &ch, &SpectrumKind::RowOrthogonal, &cfg()).unwrap();
        assert_eq!(p.phase, Phase::Hard);
        assert!(p.informative.saturated);
        assert!(p.uninformative.converged && p.uninformative.mse > 0.05);
        assert!(p.uninformative.phi < p.informative.phi);
    }

    #[test]
    fn impossible_phase_prefers_high_error() {
        let ch = Channel::zc(0.05).unwrap();
        let p = analyze_rate(0.8, 4, &ch, &SpectrumKind::Mp, &cfg()).unwrap();
        assert_eq!(p.phase, Phase::Impossible);
        assert!(p.uninformative.phi > p.informative.phi);
    }

    #[test]
    fn overlaps_stay_in_their_boxes() {
        let ch = Channel::bsc(0.01).unwrap();
        for kind in [SpectrumKind::Mp, SpectrumKind::RowOrthogonal] {
            for r in [0.5, 0.7, 0.9] {
                let o = fixed_point(r, 8, &ch, &kind, Init::Uninformative, &cfg()).unwrap();
                assert!((0.0..=0.125).contains(&o.q_x), "{o:?}");
                assert!((0.0..=1.0).contains(&o.qh_z) && o.q_z >= 0.0 && o.qh_x >= 0.0);
                assert!((o.mse - (1.0 - 8.0 * o.q_x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn binary_error_floor_vanishes() {
        let law = SpectralLaw::uniform(0.5, 1.5, 16).unwrap();
        let chans = [Channel::bec(0.1).unwrap(), Channel::bsc(0.01).unwrap(), Channel::zc(0.05).unwrap()];
        for kind in [SpectrumKind::Mp, SpectrumKind::RowOrthogonal, SpectrumKind::Custom(law)] {
            for ch in &chans {
                assert!(error_floor(0.7, 8, ch, &kind, &cfg()).unwrap() < 1e-6, "{ch} {}", kind.name());
            }
        }
    }

    #[test]
    fn awgn_error_floor_is_positive() {
        let ch = Channel::awgn(10.0).unwrap();
        let o = fixed_point(0.6, 2, &ch, &SpectrumKind::Mp, Init::Informative, &cfg()).unwrap();
        assert!(!o.saturated && o.converged);
        assert!(o.mse > 1e-4, "{o:?}");
    }

    #[test]
    fn perfect_branch_free_entropy() {
        let ch = Channel::bsc(0.01).unwrap();
        let p = Problem::new(ch, 8, 0.7, SpectrumKind::RowOrthogonal, &cfg()).unwrap();
        let e = 0.01f64;
        let want = p.alpha() * 8.0 * (e * e.ln() + (1.0 - e) * (1.0 - e).ln());
        assert!((p.perfect_free_entropy().unwrap() - want).abs() < 1e-14);
        let o = p.fixed_point(Init::Informative).unwrap();
        assert_eq!(o.phi, p.perfect_free_entropy().unwrap());
    }

    #[test]
    fn zero_snr_prior_term_is_entropy() {
        // At x = 1, y → 0 the prior part of Φ is ln B.
        let ch = Channel::bec(0.1).unwrap();
        let p = Problem::new(ch, 4, 0.7, SpectrumKind::Mp, &cfg()).unwrap();
        let (phi, _, qh_x, qh_z) = p.free_entropy_at(1.0, 0.0).unwrap();
        assert_eq!((qh_x, qh_z), (0.0, 0.0));
        let j0 = output_entropy(&ch, 0.0, 61).unwrap();
        let want = 4f64.ln() + p.alpha() * 4.0 * j0;
        assert!((phi - want).abs() < 1e-12);
    }

    #[test]
    fn at_most_two_fixed_points() {
        let ch = Channel::bsc(0.01).unwrap();
        let p = Problem::new(ch, 8, 0.72, SpectrumKind::RowOrthogonal, &cfg()).unwrap();
        let mut found: Vec<f64> = Vec::new();
        for i in 0..10 {
            let x0 = (i as f64 + 0.5) / 10.0;
            let o = p.fixed_point_from(x0).unwrap();
            if !found.iter().any(|m| (m - o.mse).abs() < 1e-5) {
                found.push(o.mse);
            }
        }
        assert!(found.len() <= 2, "{found:?}");
    }

    #[test]
    fn thresholds_bracket_errors() {
        let ch = Channel::bec(0.1).unwrap();
        let err = thresholds(&ch, 2, &SpectrumKind::Mp, 0.6, 0.9, &cfg()).unwrap_err();
        assert!(matches!(err, Error::Bracket(_)));
    }
}
