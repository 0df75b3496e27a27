//! The rectangular spherical integral `F(x, y)` of a spectral law.
//!
//! For a general law of the nonzero eigenvalues the two-variable infimum
//! collapses to one equation in the product `P = Λx Λy`:
//!
//! ```text
//! m(P) = E 1/(P + λ),   W(P) = (1 − α) + α P m(P),   W(P) m(P) = x y
//! Λx = W / x,   Λy = x P / W
//! ```
//!
//! taken on the branch connected to `P → ∞` (which is `xy → 0`).
//!
//! When `α > 1` there is no zero mass: all `N` eigenvalues are nonzero with
//! mean `α`. The same formula applies to the law `(1 − 1/α) δ₀ + (1/α) ν`,
//! `ν` being the actual eigenvalue law; that is how tall matrices are handled.

use crate::ensembles::SpectralLaw;
use crate::{Error, Result};

/// Below this `xy` the integral is replaced by its first-order expansion.
const SMALL_XY: f64 = 1e-13;

/// Which spectral family the coding matrix belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumKind {
    /// Gaussian i.i.d. matrices (Marchenko–Pastur).
    Mp,
    /// All nonzero eigenvalues of `AᵀA / B` equal to one.
    RowOrthogonal,
    /// Arbitrary compactly supported law of the nonzero eigenvalues.
    Custom(SpectralLaw),
}

impl SpectrumKind {
    pub fn name(&self) -> &'static str {
        match self {
            SpectrumKind::Mp => "gaussian-iid",
            SpectrumKind::RowOrthogonal => "row-orthogonal",
            SpectrumKind::Custom(_) => "custom",
        }
    }
}

/// Value and partial derivatives of `F(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphericalIntegral {
    pub value: f64,
    pub d_x: f64,
    pub d_y: f64,
}

/// A spectral family at a fixed aspect ratio `α = M/N`.
#[derive(Debug, Clone)]
pub struct SpectrumModel {
    kind: SpectrumKind,
    alpha: f64,
    /// Law fed to the general solver; `None` when a closed form applies.
    law: Option<SpectralLaw>,
    /// `(P*, G(P*))`, the top of the admissible branch of `law`.
    peak: Option<(f64, f64)>,
}

/// Law of nonzero eigenvalues seen by the formula for a tall matrix whose
/// `N` eigenvalues follow `α · shape`.
fn tall_law(shape: &SpectralLaw, a: f64) -> Result<SpectralLaw> {
    let mut atoms = vec![0.0];
    let mut weights = vec![1.0 - 1.0 / a];
    atoms.extend(shape.atoms().iter().map(|x| a * x));
    weights.extend(shape.weights().iter().map(|w| w / a));
    SpectralLaw::from_weighted(atoms, weights)
}

impl SpectrumModel {
    pub fn new(kind: SpectrumKind, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        let law = match &kind {
            SpectrumKind::Mp => None,
            SpectrumKind::RowOrthogonal if alpha <= 1.0 => None,
            SpectrumKind::RowOrthogonal => Some(tall_law(&SpectralLaw::unit(), alpha)?),
            SpectrumKind::Custom(l) if alpha <= 1.0 => Some(l.clone()),
            SpectrumKind::Custom(l) => Some(tall_law(l, alpha)?),
        };
        let peak = law.as_ref().map(|l| find_peak(l, alpha));
        Ok(Self { kind, alpha, law, peak })
    }

    pub fn kind(&self) -> &SpectrumKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Largest `y` for which `F(x, y)` is defined, `+∞` if unbounded.
    pub fn y_max(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::INFINITY;
        }
        match (&self.kind, self.peak) {
            (SpectrumKind::Mp, _) => f64::INFINITY,
            (_, Some((_, g))) => g / x,
            (_, None) => 1.0 / (4.0 * self.alpha * x),
        }
    }

    /// `F(x, y)` with `∂F/∂x` and `∂F/∂y`.
    pub fn rect_spherical(&self, x: f64, y: f64) -> Result<SphericalIntegral> {
        if !(x >= 0.0 && y >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spherical integral needs x, y >= 0, got ({x}, {y})"
            )));
        }
        let a = self.alpha;
        let xy = x * y;
        match (&self.kind, &self.law) {
            (SpectrumKind::Mp, _) => Ok(mp(a, x, y)),
            (_, None) => {
                let mut disc = 1.0 - 4.0 * a * xy;
                // Rounding at the edge of the domain.
                if disc < 0.0 && disc > -1e-12 {
                    disc = 0.0;
                }
                if disc < 0.0 {
                    return Err(Error::OutsideDomain(format!(
                        "4αxy = {} > 1 for the row-orthogonal integral",
                        1.0 - disc
                    )));
                }
                let s = disc.sqrt();
                Ok(SphericalIntegral {
                    value: -0.5 * (0.5 * (1.0 + s)).ln() + 0.5 * s - 0.5,
                    d_x: -a * y / (1.0 + s),
                    d_y: -a * x / (1.0 + s),
                })
            }
            (_, Some(law)) => {
                if xy < SMALL_XY {
                    return Ok(mp(a, x, y));
                }
                let (p_star, g_star) = self.peak.expect("a solver law carries its peak");
                let xy = if xy > g_star && xy <= g_star * (1.0 + 1e-12) { g_star } else { xy };
                if xy > g_star {
                    return Err(Error::OutsideDomain(format!(
                        "xy = {xy} exceeds the admissible maximum {g_star}"
                    )));
                }
                let p = solve_branch(law, a, p_star, xy)?;
                let m = law.expect(|l| 1.0 / (p + l));
                let w = (1.0 - a) + a * p * m;
                let lx = w / x;
                let ly = x * p / w;
                let log_mean = law.expect(|l| (p + l).ln());
                let twice =
                    (1.0 - a) * (x / w).ln() - a * log_mean + w + a * ly * y - x.ln() - a * y.ln() - a - 1.0;
                Ok(SphericalIntegral {
                    value: 0.5 * twice,
                    d_x: 0.5 * (lx - 1.0 / x),
                    d_y: 0.5 * a * (ly - 1.0 / y),
                })
            }
        }
    }
}

fn mp(a: f64, x: f64, y: f64) -> SphericalIntegral {
    SphericalIntegral { value: -0.5 * a * x * y, d_x: -0.5 * a * y, d_y: -0.5 * a * x }
}

/// `G(P) = W(P) m(P)`.
fn g_of(law: &SpectralLaw, a: f64, p: f64) -> f64 {
    let m = law.expect(|l| 1.0 / (p + l));
    ((1.0 - a) + a * p * m) * m
}

/// Lower end of the domain of `P`: `m(P)` must stay finite and positive.
fn p_floor(law: &SpectralLaw) -> f64 {
    -law.min()
}

/// Maximizer of `G` over the domain, found on a log grid in `P − P_floor`
/// and refined by golden section.
fn find_peak(law: &SpectralLaw, a: f64) -> (f64, f64) {
    let lo = p_floor(law);
    let at = |t: f64| lo + t.exp();
    let grid: Vec<f64> = (0..=600).map(|i| -30.0 + 60.0 * i as f64 / 600.0).collect();
    let vals: Vec<f64> = grid.iter().map(|&t| g_of(law, a, at(t))).collect();
    let best = (0..vals.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).expect("grid is not empty");
    if best == 0 {
        // Supremum at the floor (possible with an atom at zero).
        return (at(grid[0]), vals[0]);
    }
    let (mut l, mut r) = (grid[best - 1], grid[(best + 1).min(grid.len() - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let m1 = r - phi * (r - l);
        let m2 = l + phi * (r - l);
        if g_of(law, a, at(m1)) < g_of(law, a, at(m2)) {
            l = m1;
        } else {
            r = m2;
        }
        if r - l < 1e-14 {
            break;
        }
    }
    let t = 0.5 * (l + r);
    (at(t), g_of(law, a, at(t)))
}

/// Root of `G(P) = target` on the decreasing branch `P ≥ P*`.
fn solve_branch(law: &SpectralLaw, a: f64, p_star: f64, target: f64) -> Result<f64> {
    let lo_floor = p_floor(law);
    let mut lo = (p_star - lo_floor).ln();
    let mut hi = lo.max(0.0) + 1.0;
    let at = |t: f64| lo_floor + t.exp();
    let mut expand = 0;
    while g_of(law, a, at(hi)) > target {
        hi += 2.0;
        expand += 1;
        if expand > 200 {
            return Err(Error::NoConvergence(format!(
                "could not bracket the spherical-integral branch for xy = {target}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g_of(law, a, at(mid)) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    Ok(at(0.5 * (lo + hi)))
}
