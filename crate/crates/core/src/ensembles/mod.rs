//! Rotationally invariant coding matrices, held as thin SVD factors.
//!
//! A matrix `A` (M×N) is stored as `U diag(σ) Vᵀ` where `U` is M×k and `V` is
//! N×k with orthonormal columns and `k = min(M, N)`. Factors are either dense
//! (QR/SVD based) or fast randomized orthogonal transforms for sizes where a
//! dense N×N factor would not fit in memory.

mod dump;
mod orthogonal;

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::code::CodeParams;
use crate::{Error, Result};

pub use dump::{load_factors, save_factors};
pub use orthogonal::{haar_columns, Factor, FastOrthogonal};

/// Number of sign/DCT/permutation stages in a fast orthogonal factor.
pub const FAST_ROUNDS: usize = 2;

/// Above this N the automatic backend switches from dense to fast factors.
/// Nodes of the Marchenko–Pastur law used for large Gaussian stand-ins.
const MP_NODES: usize = 512;

pub const DENSE_AUTO_LIMIT: usize = 2048;

/// How orthogonal factors are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Dense for `N <= DENSE_AUTO_LIMIT`, fast otherwise.
    #[default]
    Auto,
    Dense,
    Fast,
}

impl Backend {
    fn use_dense(self, n: usize) -> bool {
        match self {
            Backend::Auto => n <= DENSE_AUTO_LIMIT,
            Backend::Dense => true,
            Backend::Fast => false,
        }
    }
}
/// A discrete spectral law with mean one: weighted atoms sorted by value.
///
/// Used both to draw finite-size spectra and as the asymptotic law of the
/// nonzero eigenvalues of `AᵀA / B`. Smooth laws are represented by
/// quadrature nodes so that spectral averages are accurate to near machine
/// precision; such laws are marked smooth and sampled through an
/// interpolated quantile, while laws given as atoms are sampled exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLaw {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    smooth: bool,
}

impl SpectralLaw {
    /// Builds a law from weighted atoms; weights are normalized and the
    /// atoms rescaled to mean one.
    pub fn from_weighted(atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::InvalidParameter("spectral law needs as many weights as atoms".into()));
        }
        if atoms.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::InvalidParameter("spectral atoms must be finite and nonnegative".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidParameter("weights sum to zero".into()));
        }
        let mean = atoms.iter().zip(&weights).map(|(a, w)| a * w).sum::<f64>() / total;
        if !(mean > 0.0) {
            return Err(Error::InvalidParameter("all-zero spectrum".into()));
        }
        let mut pairs: Vec<(f64, f64)> =
            atoms.into_iter().zip(weights).map(|(a, w)| (a / mean, w / total)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (atoms, weights) = pairs.into_iter().unzip();
        Ok(Self { atoms, weights, smooth: false })
    }

    fn smoothed(self) -> Self {
        Self { smooth: true, ..self }
    }

    /// Equal-weight atoms.
    pub fn from_atoms(atoms: Vec<f64>) -> Result<Self> {
        let w = vec![1.0; atoms.len()];
        Self::from_weighted(atoms, w)
    }

    /// Samples a quantile function at `n` midpoints `(i + 1/2)/n`.
    pub fn from_quantile(q: impl Fn(f64) -> f64, n: usize) -> Result<Self> {
        Ok(Self::from_atoms((0..n).map(|i| q((i as f64 + 0.5) / n as f64)).collect())?.smoothed())
    }

    /// All nonzero eigenvalues equal: the row-orthogonal law.
    pub fn unit() -> Self {
        Self { atoms: vec![1.0], weights: vec![1.0], smooth: false }
    }

    /// Uniform law on `[lo, hi]` as an `n`-node Gauss–Legendre rule.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(0.0 <= lo && lo < hi) {
            return Err(Error::InvalidParameter(format!("bad interval [{lo}, {hi}]")));
        }
        let rule = crate::quadrature::legendre_rule(n);
        let atoms = rule.iter().map(|&(x, _)| lo + 0.5 * (hi - lo) * (x + 1.0)).collect();
        let weights = rule.iter().map(|&(_, w)| w).collect();
        Ok(Self::from_weighted(atoms, weights)?.smoothed())
    }

    /// Marchenko–Pastur law of `G Gᵀ` with `G` of aspect `ratio ≤ 1` and
    /// unit-mean eigenvalues, as an `n`-node rule in the angle variable
    /// `λ = (1 + r) − 2√r cos θ`, where the density is smooth.
    pub fn marchenko_pastur(ratio: f64, n: usize) -> Result<Self> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "Marchenko-Pastur ratio must be in (0, 1], got {ratio}"
            )));
        }
        let center = 1.0 + ratio;
        let half = 2.0 * ratio.sqrt();
        let rule = crate::quadrature::legendre_rule(n);
        let mut atoms = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for &(x, w) in rule.iter() {
            let t = 0.5 * std::f64::consts::PI * (x + 1.0);
            let lambda = center - half * t.cos();
            let s = t.sin();
            atoms.push(lambda);
            weights.push(w * half * half * s * s / (2.0 * std::f64::consts::PI * ratio * lambda));
        }
        Ok(Self::from_weighted(atoms, weights)?.smoothed())
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Quantile function. Discrete laws give a step function; smooth laws
    /// interpolate linearly between the cumulative midpoints of the atoms
    /// and are flat beyond the first and last one.
    pub fn quantile(&self, u: f64) -> f64 {
        if !self.smooth {
            let mut cum = 0.0;
            for (&a, &w) in self.atoms.iter().zip(&self.weights) {
                cum += w;
                if u < cum {
                    return a;
                }
            }
            return self.atoms[self.atoms.len() - 1];
        }
        let mut cum = 0.0;
        let mut prev: Option<(f64, f64)> = None;
        for (&a, &w) in self.atoms.iter().zip(&self.weights) {
            let mid = cum + 0.5 * w;
            if u <= mid {
                return match prev {
                    None => a,
                    Some((pm, pa)) => pa + (a - pa) * (u - pm) / (mid - pm),
                };
            }
            prev = Some((mid, a));
            cum += w;
        }
        self.atoms[self.atoms.len() - 1]
    }

    /// `E f(λ)` under the law.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(&a, &w)| w * f(a)).sum()
    }

    pub fn min(&self) -> f64 {
        self.atoms[0]
    }

    pub fn max(&self) -> f64 {
        self.atoms[self.atoms.len() - 1]
    }
}

/// Spectrum families for finite-size sampling.
#[derive(Debug, Clone)]
pub enum SpectrumSpec {
    /// Entries i.i.d. `N(0, 1/L)`. Beyond the dense limit the sample keeps
    /// the Marchenko–Pastur spectrum but uses fast orthogonal factors.
    GaussianIid,
    RowOrthogonal,
    /// Nonzero squared singular values drawn from the law's quantiles.
    Custom(SpectralLaw),
}

impl SpectrumSpec {
    pub fn sample(&self, params: &CodeParams, seed: u64, backend: Backend) -> Result<FactoredMatrix> {
        match self {
            SpectrumSpec::GaussianIid if backend.use_dense(params.n.max(params.m)) => {
                sample_gaussian_iid(params, seed)
            }
            // Too large for a dense SVD: same spectrum, fast Haar-like factors.
            SpectrumSpec::GaussianIid => {
                let a = params.alpha;
                let shape = SpectralLaw::marchenko_pastur(a.min(1.0 / a), MP_NODES)?;
                sample_custom_with(params, &shape, seed, backend)
            }
            SpectrumSpec::RowOrthogonal => sample_row_orthogonal_with(params, seed, backend),
            SpectrumSpec::Custom(law) => sample_custom_with(params, law, seed, backend),
        }
    }
}

/// `A = U diag(σ) Vᵀ` with column-orthonormal `U` (M×k) and `V` (N×k).
#[derive(Debug, Clone)]
pub struct FactoredMatrix {
    m: usize,
    n: usize,
    sigma: Vec<f64>,
    u: Factor,
    v: Factor,
    dense: Option<Arc<Vec<f64>>>,
}

impl FactoredMatrix {
    pub fn new(sigma: Vec<f64>, u: Factor, v: Factor) -> Result<Self> {
        let k = sigma.len();
        if u.cols() != k || v.cols() != k {
            return Err(Error::ShapeMismatch {
                expected: format!("factors with {k} columns"),
                got: format!("U has {}, V has {}", u.cols(), v.cols()),
            });
        }
        if sigma.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::InvalidParameter("singular values must be finite and nonnegative".into()));
        }
        Ok(Self { m: u.rows(), n: v.rows(), sigma, u, v, dense: None })
    }

    /// Attaches the row-major dense realization the factors were computed from.
    pub fn with_dense(mut self, dense: Vec<f64>) -> Result<Self> {
        if dense.len() != self.m * self.n {
            return Err(Error::ShapeMismatch {
                expected: format!("{} entries", self.m * self.n),
                got: format!("{}", dense.len()),
            });
        }
        self.dense = Some(Arc::new(dense));
        Ok(self)
    }

    /// Wraps a dense matrix by computing its thin SVD.
    pub fn from_dense(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * n {
            return Err(Error::ShapeMismatch {
                expected: format!("{} entries", m * n),
                got: format!("{}", data.len()),
            });
        }
        let a = DMatrix::from_row_slice(m, n, &data);
        let svd = a.svd(true, true);
        let u = svd.u.ok_or_else(|| Error::LinearAlgebra("SVD did not return U".into()))?;
        let vt = svd.v_t.ok_or_else(|| Error::LinearAlgebra("SVD did not return V".into()))?;
        let sigma = svd.singular_values.iter().copied().collect();
        Self::new(sigma, Factor::from_matrix(&u), Factor::from_matrix(&vt.transpose()))?.with_dense(data)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Singular values, length `min(M, N)`.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn u(&self) -> &Factor {
        &self.u
    }

    pub fn v(&self) -> &Factor {
        &self.v
    }

    /// The stored dense realization, if any.
    pub fn dense(&self) -> Option<&[f64]> {
        self.dense.as_deref().map(Vec::as_slice)
    }

    /// Row-major `U diag(σ) Vᵀ`, built from the factors.
    pub fn to_dense(&self) -> Vec<f64> {
        let k = self.sigma.len();
        let u = self.u.to_dense();
        let v = self.v.to_dense();
        let mut out = vec![0.0; self.m * self.n];
        for i in 0..self.m {
            for j in 0..self.n {
                out[i * self.n + j] = (0..k).map(|l| u[i * k + l] * self.sigma[l] * v[j * k + l]).sum();
            }
        }
        out
    }

    /// `Σ σ_i²`, the trace of `AᵀA`.
    pub fn trace_gram(&self) -> f64 {
        self.sigma.iter().map(|s| s * s).sum()
    }

    fn check_len(&self, v: &[f64], want: usize) -> Result<()> {
        if v.len() != want {
            return Err(Error::ShapeMismatch {
                expected: format!("length {want}"),
                got: format!("length {}", v.len()),
            });
        }
        Ok(())
    }

    /// `A x` through the factors.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x, self.n)?;
        let mut c = self.v.apply_t(x);
        c.iter_mut().zip(&self.sigma).for_each(|(c, s)| *c *= s);
        Ok(self.u.apply(&c))
    }

    /// `Aᵀ y` through the factors.
    pub fn rmatvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_len(y, self.m)?;
        let mut c = self.u.apply_t(y);
        c.iter_mut().zip(&self.sigma).for_each(|(c, s)| *c *= s);
        Ok(self.v.apply(&c))
    }
}

/// Gaussian entries of variance `1/L`, factored by a dense SVD.
pub fn sample_gaussian_iid(params: &CodeParams, seed: u64) -> Result<FactoredMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (params.l as f64).sqrt();
    let data: Vec<f64> =
        (0..params.m * params.n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    FactoredMatrix::from_dense(params.m, params.n, data)
}

/// `√B` times a Haar matrix with orthonormal rows. When `M > N` the
/// columns are orthogonal instead, all `N` singular values equal to `√(MB/N)`.
pub fn sample_row_orthogonal(params: &CodeParams, seed: u64) -> Result<FactoredMatrix> {
    sample_row_orthogonal_with(params, seed, Backend::Auto)
}

pub fn sample_row_orthogonal_with(
    params: &CodeParams,
    seed: u64,
    backend: Backend,
) -> Result<FactoredMatrix> {
    let (m, n) = (params.m, params.n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let haar = |dim: usize, cols: usize, rng: &mut ChaCha8Rng| {
        if backend.use_dense(dim) {
            Factor::from_matrix(&haar_columns(dim, cols, rng))
        } else {
            Factor::Fast { op: FastOrthogonal::random(dim, FAST_ROUNDS, rng), cols }
        }
    };
    if m <= n {
        let v = haar(n, m, &mut rng);
        let sigma = vec![(params.b as f64).sqrt(); m];
        return FactoredMatrix::new(sigma, Factor::Identity { rows: m, cols: m }, v);
    }
    // More rows than columns: orthogonal columns instead, same total power.
    let u = haar(m, n, &mut rng);
    let sigma = vec![((m * params.b) as f64 / n as f64).sqrt(); n];
    FactoredMatrix::new(sigma, u, Factor::Identity { rows: n, cols: n })
}

/// Independent Haar factors around a spectrum drawn from `law`.
pub fn sample_custom(params: &CodeParams, law: &SpectralLaw, seed: u64) -> Result<FactoredMatrix> {
    sample_custom_with(params, law, seed, Backend::Auto)
}

pub fn sample_custom_with(
    params: &CodeParams,
    law: &SpectralLaw,
    seed: u64,
    backend: Backend,
) -> Result<FactoredMatrix> {
    let (m, n) = (params.m, params.n);
    let k = m.min(n);
    let raw: Vec<f64> = (0..k).map(|i| law.quantile((i as f64 + 0.5) / k as f64)).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("all-zero spectrum".into()));
    }
    // Power constraint: Σ S_i = N·α·B = M·B.
    let scale = (m * params.b) as f64 / total;
    let sigma: Vec<f64> = raw.iter().map(|s| (s * scale).sqrt()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u, v) = if backend.use_dense(n.max(m)) {
        (
            Factor::from_matrix(&haar_columns(m, k, &mut rng)),
            Factor::from_matrix(&haar_columns(n, k, &mut rng)),
        )
    } else {
        (
            Factor::Fast { op: FastOrthogonal::random(m, FAST_ROUNDS, &mut rng), cols: k },
            Factor::Fast { op: FastOrthogonal::random(n, FAST_ROUNDS, &mut rng), cols: k },
        )
    };
    FactoredMatrix::new(sigma, u, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    fn dense_matvec(d: &[f64], m: usize, n: usize, x: &[f64]) -> Vec<f64> {
        (0..m).map(|i| (0..n).map(|j| d[i * n + j] * x[j]).sum()).collect()
    }

    #[test]
    fn gaussian_svd_round_trip() {
        let p = CodeParams::new(6, 4, 10).unwrap();
        let a = sample_gaussian_iid(&p, 1).unwrap();
        assert!(max_abs_diff(&a.to_dense(), a.dense().unwrap()) < 1e-10);
        let x: Vec<f64> = (0..p.n).map(|i| (i as f64).cos()).collect();
        let want = dense_matvec(a.dense().unwrap(), p.m, p.n, &x);
        assert!(max_abs_diff(&a.matvec(&x).unwrap(), &want) < 1e-10);
    }

    #[test]
    fn row_orthogonal_gram_is_scaled_identity() {
        for backend in [Backend::Dense, Backend::Fast] {
            let p = CodeParams::new(8, 4, 20).unwrap();
            let a = sample_row_orthogonal_with(&p, 2, backend).unwrap();
            let d = a.to_dense();
            for i in 0..p.m {
                for j in 0..p.m {
                    let g: f64 = (0..p.n).map(|c| d[i * p.n + c] * d[j * p.n + c]).sum();
                    let want = if i == j { 4.0 } else { 0.0 };
                    assert!((g - want).abs() < 1e-10, "{backend:?}");
                }
            }
        }
    }

    #[test]
    fn tall_row_orthogonal_has_orthogonal_columns() {
        // L = 2, B = 2, M = 5 > N = 4.
        let p = CodeParams::new(2, 2, 5).unwrap();
        for backend in [Backend::Dense, Backend::Fast] {
            let a = sample_row_orthogonal_with(&p, 0, backend).unwrap();
            let d = a.to_dense();
            let scale = (p.m * p.b) as f64 / p.n as f64;
            for i in 0..p.n {
                for j in 0..p.n {
                    let g: f64 = (0..p.m).map(|r| d[r * p.n + i] * d[r * p.n + j]).sum();
                    let want = if i == j { scale } else { 0.0 };
                    assert!((g - want).abs() < 1e-10, "{backend:?}");
                }
            }
            assert!((a.trace_gram() - (p.m * p.b) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn custom_power_constraint() {
        let p = CodeParams::new(16, 4, 40).unwrap();
        let law = SpectralLaw::uniform(0.5, 1.5, 7).unwrap();
        for backend in [Backend::Dense, Backend::Fast] {
            let a = sample_custom_with(&p, &law, 3, backend).unwrap();
            let mean_s = a.trace_gram() / p.n as f64;
            assert!((mean_s - p.alpha * 4.0).abs() < 1e-9 * p.alpha * 4.0);
        }
    }

    #[test]
    fn all_zero_spectrum_rejected() {
        assert!(SpectralLaw::from_atoms(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn rmatvec_is_adjoint() {
        let p = CodeParams::new(8, 4, 12).unwrap();
        let law = SpectralLaw::uniform(0.2, 2.0, 5).unwrap();
        let a = sample_custom_with(&p, &law, 9, Backend::Fast).unwrap();
        let x: Vec<f64> = (0..p.n).map(|i| (0.3 * i as f64).sin()).collect();
        let y: Vec<f64> = (0..p.m).map(|i| (0.7 * i as f64).cos()).collect();
        let ax = a.matvec(&x).unwrap();
        let aty = a.rmatvec(&y).unwrap();
        let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = aty.iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn mp_law_has_unit_mean_and_edges() {
        let law = SpectralLaw::marchenko_pastur(0.25, 200).unwrap();
        assert!((law.expect(|x| x) - 1.0).abs() < 1e-12);
        // Second moment of MP with unit mean is 1 + ratio.
        assert!((law.expect(|x| x * x) - 1.25).abs() < 1e-12);
        assert!(law.min() > 0.25 && law.max() < 2.25);
    }

    #[test]
    fn equal_weight_quantile_hits_atoms() {
        let law = SpectralLaw::from_atoms(vec![3.0, 1.0, 2.0]).unwrap();
        for (i, want) in [0.5, 1.0, 1.5].iter().enumerate() {
            assert!((law.quantile((i as f64 + 0.5) / 3.0) - want).abs() < 1e-15);
        }
        assert_eq!(law.quantile(0.0), 0.5);
        assert_eq!(law.quantile(1.0), 1.5);
        let law = SpectralLaw::from_weighted(vec![1.0, 3.0], vec![0.25, 0.75]).unwrap();
        assert_eq!((law.quantile(0.24), law.quantile(0.26)), (0.4, 1.2));
    }
}
