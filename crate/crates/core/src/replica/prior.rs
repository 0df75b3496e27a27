//! Section-prior side of the potential: the MSE `E(q̂)` of a one-hot section
//! observed through a Gaussian channel of SNR `q̂`, and `E ln Z₀(q̂)`.
//!
//! Both are Monte Carlo averages over `ξ ~ N(0, I_B)` with regression control
//! variates (low-order polynomials of `ξ`). Samples are drawn in
//! fixed-size chunks, each from its own ChaCha stream, and chunk results are
//! summed in chunk order, so estimates do not depend on the thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

const CHUNK: usize = 8192;

/// Grid of `ln q̂` used by [`PriorTable`].
const GRID_LO: f64 = -13.815_510_557_964_274; // ln 1e-6
const GRID_HI: f64 = 9.210_340_371_976_184; // ln 1e4
const GRID_STEP: f64 = 0.05;

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Number of zero-mean control variates: `ξ₁`, `Σ_{i≥2} ξ_i`, `ξ₁² − 1`,
/// `Σ_{i≥2} (ξ_i² − 1)`.
const NC: usize = 4;

fn controls(xi: &[f64]) -> [f64; NC] {
    let rest: f64 = xi[1..].iter().sum();
    let rest_sq: f64 = xi[1..].iter().map(|x| x * x - 1.0).sum();
    [xi[0], rest, xi[0] * xi[0] - 1.0, rest_sq]
}

/// Raw sums of the controls, shared by every `q̂`.
#[derive(Clone, Copy, Default)]
struct ControlSums {
    n: f64,
    c: [f64; NC],
    cc: [[f64; NC]; NC],
}

impl ControlSums {
    fn push(&mut self, c: &[f64; NC]) {
        self.n += 1.0;
        for i in 0..NC {
            self.c[i] += c[i];
            for j in 0..NC {
                self.cc[i][j] += c[i] * c[j];
            }
        }
    }

    fn add(&mut self, o: &ControlSums) {
        self.n += o.n;
        for i in 0..NC {
            self.c[i] += o.c[i];
            for j in 0..NC {
                self.cc[i][j] += o.cc[i][j];
            }
        }
    }
}

/// Raw sums of one observable and its products with the controls.
#[derive(Clone, Copy, Default)]
struct Sums {
    y: f64,
    yy: f64,
    cy: [f64; NC],
}

impl Sums {
    fn push(&mut self, y: f64, c: &[f64; NC]) {
        self.y += y;
        self.yy += y * y;
        for (acc, ci) in self.cy.iter_mut().zip(c) {
            *acc += ci * y;
        }
    }

    fn add(&mut self, o: &Sums) {
        self.y += o.y;
        self.yy += o.yy;
        for i in 0..NC {
            self.cy[i] += o.cy[i];
        }
    }

    /// Regression control-variate estimate of the mean. Falls back to the
    /// plain mean when the adjusted value leaves `[floor, ∞)`.
    fn estimate(&self, ctl: &ControlSums, floor: f64) -> Estimate {
        let n = ctl.n;
        let mean = self.y / n;
        let var = (self.yy / n - mean * mean).max(0.0);
        let plain = Estimate { mean, stderr: (var / (n - 1.0).max(1.0)).sqrt() };
        let cbar: Vec<f64> = ctl.c.iter().map(|c| c / n).collect();
        let scc = nalgebra::SMatrix::<f64, NC, NC>::from_fn(|i, j| ctl.cc[i][j] / n - cbar[i] * cbar[j]);
        let scy = nalgebra::SVector::<f64, NC>::from_fn(|i, _| self.cy[i] / n - cbar[i] * mean);
        let Some(beta) = scc.cholesky().map(|ch| ch.solve(&scy)) else {
            return plain;
        };
        let adjusted = mean - (0..NC).map(|i| beta[i] * cbar[i]).sum::<f64>();
        let resid = (var - beta.dot(&scy)).max(0.0);
        if !(adjusted >= floor) || !(resid <= var) {
            return plain;
        }
        Estimate { mean: adjusted, stderr: (resid / (n - 1.0 - NC as f64).max(1.0)).sqrt() }
    }
}

#[derive(Clone, Default)]
struct Moments {
    mse: Sums,
    lnz: Sums,
}

impl Moments {
    fn add(&mut self, o: &Moments) {
        self.mse.add(&o.mse);
        self.lnz.add(&o.lnz);
    }

    fn estimates(&self, ctl: &ControlSums) -> (Estimate, Estimate) {
        (self.mse.estimate(ctl, f64::MIN_POSITIVE), self.lnz.estimate(ctl, f64::NEG_INFINITY))
    }
}

/// Per-sample error term and `ln Z₀` for true section index 0.
///
/// Log-weights: `q̂/2 + √q̂ ξ₁` for the true atom and `−q̂/2 + √q̂ ξ_i`
/// otherwise; `Z₀` is their sum over the `B` atoms.
fn sample_terms(xi: &[f64], qh: f64, logw: &mut [f64]) -> (f64, f64) {
    let s = qh.sqrt();
    for (l, &x) in logw.iter_mut().zip(xi) {
        *l = -0.5 * qh + s * x;
    }
    logw[0] += qh;
    let top = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut z = 0.0;
    let mut rest = 0.0;
    let mut rest_sq = 0.0;
    for (i, &l) in logw.iter().enumerate() {
        let w = (l - top).exp();
        z += w;
        if i > 0 {
            rest += w;
            rest_sq += w * w;
        }
    }
    // 1 − Σ f_i², which has the same mean as the squared error
    // (f₁ − 1)² + Σ_{i≥2} f_i² but a much smaller variance. Expanded so
    // nothing cancels when the posterior is nearly certain.
    let w0 = z - rest;
    let mse = (2.0 * w0 * rest + (rest * rest - rest_sq).max(0.0)) / (z * z);
    (mse, top + z.ln())
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

fn chunks(samples: usize) -> Vec<(usize, usize)> {
    (0..samples.div_ceil(CHUNK)).map(|c| (c, CHUNK.min(samples - c * CHUNK))).collect()
}

/// Moments at every `qh` in `grid`, accumulated over all samples.
fn accumulate(b: usize, samples: usize, seed: u64, grid: &[f64]) -> (ControlSums, Vec<Moments>) {
    let parts: Vec<(ControlSums, Vec<Moments>)> = chunks(samples)
        .into_par_iter()
        .map(|(c, len)| {
            let mut rng = chunk_rng(seed, c);
            let mut ctl = ControlSums::default();
            let mut acc = vec![Moments::default(); grid.len()];
            let mut xi = vec![0.0; b];
            let mut logw = vec![0.0; b];
            for _ in 0..len {
                xi.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
                let cv = controls(&xi);
                ctl.push(&cv);
                for (m, &qh) in acc.iter_mut().zip(grid) {
                    let (e, lz) = sample_terms(&xi, qh, &mut logw);
                    m.mse.push(e, &cv);
                    m.lnz.push(lz, &cv);
                }
            }
            (ctl, acc)
        })
        .collect();
    let mut ctl = ControlSums::default();
    let mut total = vec![Moments::default(); grid.len()];
    for (c, part) in &parts {
        ctl.add(c);
        for (t, p) in total.iter_mut().zip(part) {
            t.add(p);
        }
    }
    (ctl, total)
}

/// Direct Monte Carlo estimate of `E(q̂)`, the MSE per section.
pub fn mse_of_qhx(qh: f64, b: usize, samples: usize, seed: u64) -> Estimate {
    prior_terms(qh, b, samples, seed).0
}

/// Direct Monte Carlo estimates of `(E(q̂), E ln Z₀(q̂))`.
pub fn prior_terms(qh: f64, b: usize, samples: usize, seed: u64) -> (Estimate, Estimate) {
    if qh <= 0.0 {
        let exact = |mean| Estimate { mean, stderr: 0.0 };
        return (exact(1.0 - 1.0 / b as f64), exact((b as f64).ln()));
    }
    let (ctl, m) = accumulate(b, samples, seed, &[qh]);
    m[0].estimates(&ctl)
}

/// `E(q̂)` and `E ln Z₀(q̂)` tabulated on a log grid with a fixed sample set
/// and interpolated by cubic Hermite splines (in `ln E` for the MSE).
#[derive(Debug)]
pub struct PriorTable {
    b: usize,
    ln_mse: Vec<f64>,
    mse_rel_se: Vec<f64>,
    lnz: Vec<f64>,
    lnz_se: Vec<f64>,
}

impl PriorTable {
    pub fn build(b: usize, samples: usize, seed: u64) -> Self {
        let n = ((GRID_HI - GRID_LO) / GRID_STEP).round() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|i| (GRID_LO + i as f64 * GRID_STEP).exp()).collect();
        let (ctl, moments) = accumulate(b, samples, seed, &grid);
        let mut table = Self {
            b,
            ln_mse: Vec::with_capacity(n),
            mse_rel_se: Vec::with_capacity(n),
            lnz: Vec::with_capacity(n),
            lnz_se: Vec::with_capacity(n),
        };
        for m in &moments {
            let (e, z) = m.estimates(&ctl);
            table.ln_mse.push(if e.mean > 0.0 { e.mean.ln() } else { f64::NEG_INFINITY });
            table.mse_rel_se.push(if e.mean > 0.0 { e.stderr / e.mean } else { 0.0 });
            table.lnz.push(z.mean);
            table.lnz_se.push(z.stderr);
        }
        table
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// Position of `qh` on the grid: `(cell, fraction)`, or `None` outside.
    fn locate(&self, qh: f64) -> Option<(usize, f64)> {
        let t = (qh.ln() - GRID_LO) / GRID_STEP;
        let last = self.lnz.len() - 1;
        if !(t >= 0.0) || t >= last as f64 {
            return None;
        }
        let i = (t.floor() as usize).min(last - 1);
        Some((i, t - i as f64))
    }

    /// `E(q̂)` with its standard error.
    pub fn mse(&self, qh: f64) -> Estimate {
        let b = self.b as f64;
        if qh <= 0.0 {
            return Estimate { mean: 1.0 - 1.0 / b, stderr: 0.0 };
        }
        let q0 = GRID_LO.exp();
        if qh < q0 {
            // Linear between the exact value at zero and the first node.
            let e0 = self.ln_mse[0].exp();
            let w = qh / q0;
            return Estimate {
                mean: (1.0 - w) * (1.0 - 1.0 / b) + w * e0,
                stderr: w * e0 * self.mse_rel_se[0],
            };
        }
        match self.locate(qh) {
            None => Estimate { mean: 0.0, stderr: 0.0 },
            Some((i, f)) => {
                if !self.ln_mse[i + 1].is_finite() || !self.ln_mse[i].is_finite() {
                    return Estimate { mean: 0.0, stderr: 0.0 };
                }
                let mean = hermite(&self.ln_mse, i, f).exp();
                let rel = (1.0 - f) * self.mse_rel_se[i] + f * self.mse_rel_se[i + 1];
                Estimate { mean, stderr: rel * mean }
            }
        }
    }

    /// `E ln Z₀(q̂)` with its standard error.
    pub fn ln_z(&self, qh: f64) -> Estimate {
        let b = self.b as f64;
        if qh <= 0.0 {
            return Estimate { mean: b.ln(), stderr: 0.0 };
        }
        let q0 = GRID_LO.exp();
        if qh < q0 {
            let w = qh / q0;
            return Estimate { mean: (1.0 - w) * b.ln() + w * self.lnz[0], stderr: w * self.lnz_se[0] };
        }
        match self.locate(qh) {
            // Far beyond the grid the true atom dominates: ln Z₀ → q̂/2.
            None => Estimate { mean: 0.5 * qh, stderr: 0.0 },
            Some((i, f)) => Estimate {
                mean: hermite(&self.lnz, i, f),
                stderr: (1.0 - f) * self.lnz_se[i] + f * self.lnz_se[i + 1],
            },
        }
    }
}

/// Cubic Hermite interpolation on a uniform grid with finite-difference
/// slopes, between nodes `i` and `i + 1`.
fn hermite(v: &[f64], i: usize, f: f64) -> f64 {
    let n = v.len();
    let slope = |j: usize| {
        let (a, b) = (j.saturating_sub(1), (j + 1).min(n - 1));
        let (va, vb) = (v[a], v[b]);
        if va.is_finite() && vb.is_finite() {
            (vb - va) / (b - a) as f64
        } else {
            v[i + 1] - v[i]
        }
    };
    let (p0, p1, m0, m1) = (v[i], v[i + 1], slope(i), slope(i + 1));
    let f2 = f * f;
    let f3 = f2 * f;
    (2.0 * f3 - 3.0 * f2 + 1.0) * p0 + (f3 - 2.0 * f2 + f) * m0 + (-2.0 * f3 + 3.0 * f2) * p1 + (f3 - f2) * m1
}

type TableKey = (usize, usize, u64);

/// Shared table for `(B, samples, seed)`, built on first use.
pub fn prior_table(b: usize, samples: usize, seed: u64) -> Arc<PriorTable> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<PriorTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(t) = cache.lock().expect("prior cache poisoned").get(&(b, samples, seed)) {
        return t.clone();
    }
    // Built outside the lock; a concurrent duplicate build is harmless.
    let table = Arc::new(PriorTable::build(b, samples, seed));
    cache.lock().expect("prior cache poisoned").entry((b, samples, seed)).or_insert(table).clone()
}
