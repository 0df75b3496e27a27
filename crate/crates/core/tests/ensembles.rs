use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sscodes::code::{encode, sample_message, CodeParams};
use sscodes::ensembles::{Backend, FactoredMatrix, SpectralLaw, SpectrumSpec};

fn gram_moments(a: &FactoredMatrix, b: usize) -> (f64, f64) {
    // Moments of the nonzero eigenvalues of AᵀA / B.
    let k = a.sigma().len() as f64;
    let ev: Vec<f64> = a.sigma().iter().map(|s| s * s / b as f64).collect();
    (ev.iter().sum::<f64>() / k, ev.iter().map(|e| e * e).sum::<f64>() / k)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

#[test]
fn gaussian_entries_have_variance_one_over_l() {
    let p = CodeParams::new(64, 4, 200).unwrap();
    let a = SpectrumSpec::GaussianIid.sample(&p, 5, Backend::Auto).unwrap();
    let d = a.to_dense();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| x * x).sum::<f64>() / n;
    assert!(mean.abs() < 4.0 / (64.0 * n).sqrt(), "{mean}");
    assert!((var * 64.0 - 1.0).abs() < 0.03, "{var}");
}

#[test]
fn gaussian_spectrum_follows_marchenko_pastur() {
    // The second moment of the unit-mean MP law at aspect c is 1 + c,
    // both for a dense sample and for the large-size fallback.
    for (l, m) in [(128, 256), (1024, 3000)] {
        let p = CodeParams::new(l, 4, m).unwrap();
        let a = SpectrumSpec::GaussianIid.sample(&p, 9, Backend::Auto).unwrap();
        let (m1, m2) = gram_moments(&a, 4);
        let c = p.alpha.min(1.0 / p.alpha);
        assert!((m1 * p.alpha.max(1.0) - 1.0).abs() < 0.02 * p.alpha.max(1.0), "L={l}: mean {m1}");
        let m2n = m2 / (m1 * m1);
        assert!((m2n - (1.0 + c)).abs() < 0.03, "L={l}: {m2n} vs {}", 1.0 + c);
    }
}

#[test]
fn fast_row_orthogonal_has_scaled_identity_gram() {
    let p = CodeParams::from_rate(1024, 8, 0.8).unwrap();
    let a = SpectrumSpec::RowOrthogonal.sample(&p, 3, Backend::Fast).unwrap();
    let y = random_vec(p.m, 1);
    let back = a.matvec(&a.rmatvec(&y).unwrap()).unwrap();
    for (u, v) in back.iter().zip(&y) {
        assert!((u - 8.0 * v).abs() < 1e-10);
    }
}

#[test]
fn custom_spectrum_reproduces_its_law() {
    let law = SpectralLaw::from_atoms(vec![0.5, 1.5]).unwrap();
    let p = CodeParams::new(512, 4, 1000).unwrap();
    for backend in [Backend::Dense, Backend::Fast] {
        let a = SpectrumSpec::Custom(law.clone()).sample(&p, 2, backend).unwrap();
        let (m1, m2) = gram_moments(&a, 4);
        assert!((m1 - 1.0).abs() < 1e-12, "{m1}");
        assert!((m2 - 1.25).abs() < 1e-3, "{m2}");
    }
}

#[test]
fn every_ensemble_meets_the_power_constraint() {
    // tr AAᵀ = M·B: exactly for orthogonal factors, on average for Gaussian.
    let p = CodeParams::new(100, 4, 300).unwrap();
    let specs =
        [SpectrumSpec::RowOrthogonal, SpectrumSpec::Custom(SpectralLaw::uniform(0.2, 1.8, 16).unwrap())];
    for s in &specs {
        let a = s.sample(&p, 4, Backend::Dense).unwrap();
        assert!((a.trace_gram() / (300.0 * 4.0) - 1.0).abs() < 1e-10, "{s:?}");
    }
    let a = SpectrumSpec::GaussianIid.sample(&p, 4, Backend::Dense).unwrap();
    assert!((a.trace_gram() / (300.0 * 4.0) - 1.0).abs() < 0.02);
}

fn spec_strategy() -> impl Strategy<Value = SpectrumSpec> {
    prop_oneof![
        Just(SpectrumSpec::GaussianIid),
        Just(SpectrumSpec::RowOrthogonal),
        prop::collection::vec(0.1f64..3.0, 1..5)
            .prop_map(|atoms| SpectrumSpec::Custom(SpectralLaw::from_atoms(atoms).unwrap())),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transpose_is_adjoint(
        l in 2usize..40,
        b in prop::sample::select(vec![2usize, 4, 8]),
        m in 4usize..200,
        spec in spec_strategy(),
        fast in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let p = CodeParams::new(l, b, m).unwrap();
        let backend = if fast { Backend::Fast } else { Backend::Dense };
        let a = spec.sample(&p, seed, backend).unwrap();
        prop_assert_eq!((a.m(), a.n()), (m, l * b));
        let x = random_vec(p.n, seed ^ 1);
        let y = random_vec(p.m, seed ^ 2);
        let lhs = dot(&a.matvec(&x).unwrap(), &y);
        let rhs = dot(&x, &a.rmatvec(&y).unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
    }

    #[test]
    fn sampling_is_deterministic(
        l in 2usize..20,
        m in 4usize..60,
        spec in spec_strategy(),
        seed in any::<u64>(),
    ) {
        let p = CodeParams::new(l, 4, m).unwrap();
        let a = spec.sample(&p, seed, Backend::Fast).unwrap().to_dense();
        let b = spec.sample(&p, seed, Backend::Fast).unwrap().to_dense();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn codeword_sums_selected_columns(l in 1usize..20, m in 2usize..50, seed in any::<u64>()) {
        let p = CodeParams::new(l, 4, m).unwrap();
        let a = SpectrumSpec::RowOrthogonal.sample(&p, seed, Backend::Dense).unwrap();
        let msg = sample_message(&p, seed);
        let z = encode(&p, &msg, &a).unwrap();
        let dense = a.to_dense();
        for mu in 0..m {
            let want: f64 = msg.sections.iter().enumerate()
                .map(|(i, &k)| dense[mu * p.n + i * 4 + k])
                .sum();
            prop_assert!((z[mu] - want).abs() < 1e-10);
        }
    }
}
