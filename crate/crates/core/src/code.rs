//! Sparse superposition code data model: parameters, messages, section-wise
//! beliefs, encoding and error metrics.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ensembles::FactoredMatrix;
use crate::{Error, Result};

/// Dimensions and rate of a sparse superposition code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeParams {
    /// Number of sections.
    pub l: usize,
    /// Section size.
    pub b: usize,
    /// Number of channel uses.
    pub m: usize,
    /// Message length L·B.
    pub n: usize,
    /// Aspect ratio M/N.
    pub alpha: f64,
    /// Rate in bits per channel use, log2(B)/(αB).
    pub rate: f64,
}

impl CodeParams {
    pub fn new(l: usize, b: usize, m: usize) -> Result<Self> {
        if l == 0 || m == 0 {
            return Err(Error::InvalidParameter(format!("L and M must be positive (L = {l}, M = {m})")));
        }
        if b < 2 {
            return Err(Error::InvalidParameter(format!("section size B = {b} < 2")));
        }
        let n = l * b;
        let alpha = m as f64 / n as f64;
        let rate = (b as f64).log2() / (alpha * b as f64);
        Ok(Self { l, b, m, n, alpha, rate })
    }

    /// Builds a code from a target rate. M is rounded to the nearest integer
    /// and α, R are recomputed from it; the realized rate is `self.rate`.
    pub fn from_rate(l: usize, b: usize, rate: f64) -> Result<Self> {
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("rate {rate} must be positive")));
        }
        let m = (l as f64 * (b as f64).log2() / rate).round() as usize;
        Self::new(l, b, m.max(1))
    }
}

/// A message: the position of the single one inside each section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub b: usize,
    pub sections: Vec<usize>,
}

impl Message {
    pub fn new(b: usize, sections: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = sections.iter().find(|&&s| s >= b) {
            return Err(Error::InvalidParameter(format!("section index {bad} out of range for B = {b}")));
        }
        Ok(Self { b, sections })
    }

    pub fn l(&self) -> usize {
        self.sections.len()
    }

    /// Length-N one-hot expansion.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.sections.len() * self.b];
        for (l, &s) in self.sections.iter().enumerate() {
            x[l * self.b + s] = 1.0;
        }
        x
    }
}

/// Section-wise posterior probabilities, L blocks of B entries each.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionBeliefs {
    pub b: usize,
    pub probs: Vec<f64>,
}

impl SectionBeliefs {
    /// Validates that each block is a probability vector (sum within 1e-9).
    pub fn new(b: usize, probs: Vec<f64>) -> Result<Self> {
        if b < 2 || !probs.len().is_multiple_of(b) {
            return Err(Error::ShapeMismatch {
                expected: format!("a multiple of B = {b}"),
                got: probs.len().to_string(),
            });
        }
        for (l, block) in probs.chunks(b).enumerate() {
            let sum: f64 = block.iter().sum();
            if block.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "section {l} is not a probability vector (sum {sum})"
                )));
            }
        }
        Ok(Self { b, probs })
    }

    pub(crate) fn from_raw(b: usize, probs: Vec<f64>) -> Self {
        Self { b, probs }
    }

    pub fn uniform(l: usize, b: usize) -> Self {
        Self { b, probs: vec![1.0 / b as f64; l * b] }
    }

    pub fn one_hot(msg: &Message) -> Self {
        Self { b: msg.b, probs: msg.to_dense() }
    }

    pub fn l(&self) -> usize {
        self.probs.len() / self.b
    }

    /// Hard decision per section; ties go to the lowest index.
    pub fn argmax(&self) -> Vec<usize> {
        self.probs
            .chunks(self.b)
            .map(|block| {
                let mut best = 0;
                for (i, &p) in block.iter().enumerate() {
                    if p > block[best] {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }
}

/// Draws L section indices uniformly at random.
pub fn sample_message(params: &CodeParams, seed: u64) -> Message {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sections = (0..params.l).map(|_| rng.random_range(0..params.b)).collect();
    Message { b: params.b, sections }
}

/// Codeword A·x.
pub fn encode(params: &CodeParams, msg: &Message, a: &FactoredMatrix) -> Result<Vec<f64>> {
    if a.m() != params.m || a.n() != params.n || msg.l() != params.l || msg.b != params.b {
        return Err(Error::ShapeMismatch {
            expected: format!("{}x{} matrix, L = {}", params.m, params.n, params.l),
            got: format!("{}x{} matrix, L = {}", a.m(), a.n(), msg.l()),
        });
    }
    a.matvec(&msg.to_dense())
}

fn check_shapes(truth: &Message, est: &SectionBeliefs) -> Result<()> {
    if truth.b != est.b || truth.l() != est.l() {
        return Err(Error::ShapeMismatch {
            expected: format!("L = {}, B = {}", truth.l(), truth.b),
            got: format!("L = {}, B = {}", est.l(), est.b),
        });
    }
    Ok(())
}

/// L⁻¹‖x − x̂‖².
pub fn mse_per_section(truth: &Message, est: &SectionBeliefs) -> Result<f64> {
    check_shapes(truth, est)?;
    let b = truth.b;
    let mut total = 0.0;
    for (block, &s) in est.probs.chunks(b).zip(&truth.sections) {
        for (i, &p) in block.iter().enumerate() {
            let d = if i == s { 1.0 - p } else { p };
            total += d * d;
        }
    }
    Ok(total / truth.l() as f64)
}

/// Fraction of sections whose hard decision is wrong.
pub fn section_error_rate(truth: &Message, est: &SectionBeliefs) -> Result<f64> {
    check_shapes(truth, est)?;
    let wrong = est.argmax().iter().zip(&truth.sections).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.l() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rate_driven_construction_rounds_m() {
        let p = CodeParams::from_rate(1024, 8, 0.6).unwrap();
        assert_eq!(p.m, 5120);
        assert_eq!(p.n, 8192);
        assert!((p.alpha - p.m as f64 / p.n as f64).abs() < 1e-12);
        assert!((p.rate - 3.0 / (p.alpha * 8.0)).abs() < 1e-12);
        assert!((p.rate - 0.6).abs() < 1e-12);

        let p = CodeParams::from_rate(3, 4, 0.7).unwrap();
        assert_eq!(p.m, 9); // 8.571 rounds up
        assert!((p.rate - 6.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(CodeParams::new(4, 1, 2).is_err());
        assert!(CodeParams::new(0, 4, 2).is_err());
        assert!(CodeParams::from_rate(4, 4, -1.0).is_err());
    }

    #[test]
    fn message_support_and_determinism() {
        let p = CodeParams::new(3, 2, 3).unwrap();
        let m1 = sample_message(&p, 11);
        assert!(m1.sections.iter().all(|&s| s < 2));
        assert_eq!(m1, sample_message(&p, 11));
        let x = m1.to_dense();
        assert_eq!(x.iter().map(|v| v * v).sum::<f64>(), 3.0);
    }

    #[test]
    fn message_indices_are_uniform() {
        // chi-square goodness of fit, 3 degrees of freedom
        let p = CodeParams::new(100_000, 4, 1).unwrap();
        let msg = sample_message(&p, 5);
        let mut counts = [0usize; 4];
        for &s in &msg.sections {
            counts[s] += 1;
        }
        let expected = 25_000.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 16.27, "chi2 = {chi2}"); // p = 0.001
        for c in counts {
            assert!((c as f64 / 1e5 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn mse_reference_values() {
        let msg = Message::new(8, vec![3, 0, 7]).unwrap();
        assert_eq!(mse_per_section(&msg, &SectionBeliefs::one_hot(&msg)).unwrap(), 0.0);
        let u = SectionBeliefs::uniform(3, 8);
        assert!((mse_per_section(&msg, &u).unwrap() - 0.875).abs() < 1e-15);
        let msg2 = Message::new(2, vec![1, 0]).unwrap();
        let u2 = SectionBeliefs::uniform(2, 2);
        assert!((mse_per_section(&msg2, &u2).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ser_reference_values() {
        let msg = Message::new(4, vec![0, 1, 2, 3]).unwrap();
        assert_eq!(section_error_rate(&msg, &SectionBeliefs::one_hot(&msg)).unwrap(), 0.0);
        let wrong = Message::new(4, vec![1, 2, 3, 0]).unwrap();
        assert_eq!(section_error_rate(&msg, &SectionBeliefs::one_hot(&wrong)).unwrap(), 1.0);
        let one_off = Message::new(4, vec![0, 1, 2, 0]).unwrap();
        assert_eq!(section_error_rate(&msg, &SectionBeliefs::one_hot(&one_off)).unwrap(), 0.25);
    }

    #[test]
    fn argmax_ties_break_low() {
        let b = SectionBeliefs::uniform(2, 4);
        assert_eq!(b.argmax(), vec![0, 0]);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let msg = Message::new(4, vec![0, 1]).unwrap();
        assert!(mse_per_section(&msg, &SectionBeliefs::uniform(3, 4)).is_err());
        assert!(SectionBeliefs::new(4, vec![0.5, 0.5, 0.5, 0.5]).is_err());
    }

    fn beliefs_strategy() -> impl Strategy<Value = (Message, SectionBeliefs)> {
        (2usize..6, 1usize..6).prop_flat_map(|(b, l)| {
            (proptest::collection::vec(0..b, l), proptest::collection::vec(0.01f64..1.0, l * b)).prop_map(
                move |(idx, raw)| {
                    let mut probs = raw;
                    for block in probs.chunks_mut(b) {
                        let s: f64 = block.iter().sum();
                        block.iter_mut().for_each(|p| *p /= s);
                    }
                    (Message::new(b, idx).unwrap(), SectionBeliefs::new(b, probs).unwrap())
                },
            )
        })
    }

    proptest! {
        #[test]
        fn metrics_stay_in_range((msg, est) in beliefs_strategy()) {
            let mse = mse_per_section(&msg, &est).unwrap();
            let ser = section_error_rate(&msg, &est).unwrap();
            prop_assert!((0.0..=2.0).contains(&mse));
            prop_assert!((0.0..=1.0).contains(&ser));
            prop_assert_eq!(mse_per_section(&msg, &SectionBeliefs::one_hot(&msg)).unwrap(), 0.0);
        }

        #[test]
        fn mse_overlap_identity((msg, est) in beliefs_strategy()) {
            // L⁻¹‖x − x̂‖² = 1 + L⁻¹‖x̂‖² − 2 (N/L) (N⁻¹ x·x̂)
            let x = msg.to_dense();
            let l = msg.l() as f64;
            let n = x.len() as f64;
            let norm2: f64 = est.probs.iter().map(|p| p * p).sum();
            let overlap: f64 = x.iter().zip(&est.probs).map(|(a, b)| a * b).sum::<f64>() / n;
            let rhs = 1.0 + norm2 / l - 2.0 * (n / l) * overlap;
            let lhs = mse_per_section(&msg, &est).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
