//! Column-orthonormal factors: dense matrices or fast randomized transforms.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;
use rustdct::{DctPlanner, TransformType2And3};

use nalgebra::DMatrix;

/// One mixing stage: random signs, orthonormal DCT-II, random permutation.
#[derive(Clone)]
struct Round {
    signs: Vec<f64>,
    perm: Vec<usize>,
}

/// A fast n×n orthogonal operator Q = ∏ P_r C D_r.
#[derive(Clone)]
pub struct FastOrthogonal {
    n: usize,
    rounds: Vec<Round>,
    dct: Arc<dyn TransformType2And3<f64>>,
}

impl fmt::Debug for FastOrthogonal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FastOrthogonal").field("n", &self.n).field("rounds", &self.rounds.len()).finish()
    }
}

impl FastOrthogonal {
    pub fn random<R: Rng + ?Sized>(n: usize, rounds: usize, rng: &mut R) -> Self {
        let rounds = (0..rounds)
            .map(|_| {
                let signs = (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(rng);
                Round { signs, perm }
            })
            .collect();
        let dct = DctPlanner::new().plan_dct2(n);
        Self { n, rounds, dct }
    }

    fn dct_ortho(&self, v: &mut [f64]) {
        let n = self.n as f64;
        self.dct.process_dct2(v);
        v[0] *= (1.0 / n).sqrt();
        let s = (2.0 / n).sqrt();
        v[1..].iter_mut().for_each(|x| *x *= s);
    }

    fn idct_ortho(&self, v: &mut [f64]) {
        let n = self.n as f64;
        v[0] *= 2.0 * (1.0 / n).sqrt();
        let s = (2.0 / n).sqrt();
        v[1..].iter_mut().for_each(|x| *x *= s);
        self.dct.process_dct3(v);
    }

    /// Q v in place.
    pub fn apply(&self, v: &mut Vec<f64>) {
        let mut tmp = vec![0.0; self.n];
        for round in &self.rounds {
            v.iter_mut().zip(&round.signs).for_each(|(x, s)| *x *= s);
            self.dct_ortho(v);
            for (t, &p) in tmp.iter_mut().zip(&round.perm) {
                *t = v[p];
            }
            std::mem::swap(v, &mut tmp);
        }
    }

    /// Qᵀ v in place.
    pub fn apply_t(&self, v: &mut Vec<f64>) {
        let mut tmp = vec![0.0; self.n];
        for round in self.rounds.iter().rev() {
            for (x, &p) in v.iter().zip(&round.perm) {
                tmp[p] = *x;
            }
            std::mem::swap(v, &mut tmp);
            self.idct_ortho(v);
            v.iter_mut().zip(&round.signs).for_each(|(x, s)| *x *= s);
        }
    }
}

/// An `rows × cols` factor with orthonormal columns (cols ≤ rows).
#[derive(Debug, Clone)]
pub enum Factor {
    /// First `cols` columns of the identity.
    Identity { rows: usize, cols: usize },
    /// Row-major dense storage.
    Dense { rows: usize, cols: usize, data: Vec<f64> },
    /// First `cols` columns of a fast square orthogonal operator.
    Fast { op: FastOrthogonal, cols: usize },
}

impl Factor {
    pub fn rows(&self) -> usize {
        match self {
            Factor::Identity { rows, .. } | Factor::Dense { rows, .. } => *rows,
            Factor::Fast { op, .. } => op.n,
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Factor::Identity { cols, .. } | Factor::Dense { cols, .. } | Factor::Fast { cols, .. } => *cols,
        }
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let (rows, cols) = m.shape();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(m[(i, j)]);
            }
        }
        Factor::Dense { rows, cols, data }
    }

    /// F c, with `c.len() == cols`.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        debug_assert_eq!(c.len(), self.cols());
        match self {
            Factor::Identity { rows, .. } => {
                let mut out = vec![0.0; *rows];
                out[..c.len()].copy_from_slice(c);
                out
            }
            Factor::Dense { rows, cols, data } => (0..*rows)
                .map(|i| data[i * cols..(i + 1) * cols].iter().zip(c).map(|(a, b)| a * b).sum())
                .collect(),
            Factor::Fast { op, .. } => {
                let mut v = vec![0.0; op.n];
                v[..c.len()].copy_from_slice(c);
                op.apply(&mut v);
                v
            }
        }
    }

    /// Fᵀ v, with `v.len() == rows`.
    pub fn apply_t(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.rows());
        match self {
            Factor::Identity { cols, .. } => v[..*cols].to_vec(),
            Factor::Dense { cols, data, .. } => {
                let mut out = vec![0.0; *cols];
                for (row, &vi) in data.chunks(*cols).zip(v) {
                    out.iter_mut().zip(row).for_each(|(o, a)| *o += a * vi);
                }
                out
            }
            Factor::Fast { op, cols } => {
                let mut w = v.to_vec();
                op.apply_t(&mut w);
                w.truncate(*cols);
                w
            }
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let (rows, cols) = (self.rows(), self.cols());
        if let Factor::Dense { data, .. } = self {
            return data.clone();
        }
        let mut out = vec![0.0; rows * cols];
        let mut e = vec![0.0; cols];
        for j in 0..cols {
            e[j] = 1.0;
            for (i, v) in self.apply(&e).into_iter().enumerate() {
                out[i * cols + j] = v;
            }
            e[j] = 0.0;
        }
        out
    }
}

/// Haar-distributed orthonormal columns: QR of an n×k Gaussian block with
/// the sign convention R_ii > 0.
pub fn haar_columns<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, k, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}
