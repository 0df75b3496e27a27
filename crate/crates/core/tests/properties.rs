use proptest::prelude::*;

use sscodes::channels::Channel;
use sscodes::ensembles::SpectralLaw;
use sscodes::replica::{analyze_rate, prior_table, Phase, ReplicaConfig, SpectrumKind, SpectrumModel};

fn channel_strategy() -> impl Strategy<Value = Channel> {
    prop_oneof![
        (0.01f64..0.5).prop_map(|e| Channel::bec(e).unwrap()),
        (0.001f64..0.3).prop_map(|e| Channel::bsc(e).unwrap()),
        (0.01f64..0.5).prop_map(|e| Channel::zc(e).unwrap()),
        (0.5f64..30.0).prop_map(|s| Channel::awgn(s).unwrap()),
    ]
}

fn kind_strategy() -> impl Strategy<Value = SpectrumKind> {
    prop_oneof![
        Just(SpectrumKind::Mp),
        Just(SpectrumKind::RowOrthogonal),
        Just(SpectrumKind::Custom(SpectralLaw::uniform(0.5, 1.5, 16).unwrap())),
    ]
}

fn observations(ch: &Channel, seed: f64) -> Vec<f64> {
    match ch.alphabet() {
        Some(a) => a.to_vec(),
        None => vec![seed, -0.5 * seed],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Posterior mean of z equals the prior mean plus variance times the
    /// score of the evidence.
    #[test]
    fn posterior_mean_is_evidence_score(
        ch in channel_strategy(),
        p in -3.0f64..3.0,
        tau in 0.2f64..20.0,
        y0 in -2.0f64..2.0,
    ) {
        let v = 1.0 / tau;
        for y in observations(&ch, y0) {
            let Ok(z) = ch.z_out(y, p, v) else { continue };
            prop_assume!(z > 1e-8);
            let (mean, var) = ch.posterior_z_moments(y, p, tau).unwrap();
            let score = ch.d_omega_ln_z_out(y, p, v).unwrap();
            prop_assert!((mean - (p + v * score)).abs() < 1e-9 * (1.0 + mean.abs()), "{ch} y={y}");
            prop_assert!(var >= 0.0 && var.is_finite());
        }
    }

    #[test]
    fn unit_law_integral_is_row_orthogonal(
        alpha in 0.1f64..3.0,
        x in 0.01f64..1.0,
        frac in 0.01f64..0.99,
    ) {
        let ro = SpectrumModel::new(SpectrumKind::RowOrthogonal, alpha).unwrap();
        let cu = SpectrumModel::new(SpectrumKind::Custom(SpectralLaw::unit()), alpha).unwrap();
        let y = frac * ro.y_max(x).min(cu.y_max(x)).min(5.0);
        let (a, b) = (ro.rect_spherical(x, y).unwrap(), cu.rect_spherical(x, y).unwrap());
        prop_assert!((a.value - b.value).abs() < 1e-8 * (1.0 + a.value.abs()));
    }

    #[test]
    fn spherical_integral_partials_are_derivatives(
        alpha in 0.1f64..2.0,
        kind in kind_strategy(),
        x in 0.02f64..1.0,
        frac in 0.05f64..0.9,
    ) {
        let m = SpectrumModel::new(kind, alpha).unwrap();
        let y = frac * m.y_max(x).min(5.0);
        let f = m.rect_spherical(x, y).unwrap();
        let h = 1e-6 * x.min(y);
        let fx = (m.rect_spherical(x + h, y).unwrap().value - m.rect_spherical(x - h, y).unwrap().value) / (2.0 * h);
        let fy = (m.rect_spherical(x, y + h).unwrap().value - m.rect_spherical(x, y - h).unwrap().value) / (2.0 * h);
        prop_assert!((fx - f.d_x).abs() < 1e-5 * (1.0 + f.d_x.abs()), "{fx} {}", f.d_x);
        prop_assert!((fy - f.d_y).abs() < 1e-5 * (1.0 + f.d_y.abs()), "{fy} {}", f.d_y);
    }

    #[test]
    fn prior_mse_decreases_with_snr(
        b in prop::sample::select(vec![2usize, 4, 8]),
        lo in -8.0f64..4.0,
        gap in 0.05f64..3.0,
    ) {
        let t = prior_table(b, 20_000, 1);
        let (e1, e2) = (t.mse(lo.exp()), t.mse((lo + gap).exp()));
        let cap = 1.0 - 1.0 / b as f64;
        prop_assert!((0.0..=cap + 1e-12).contains(&e1.mean) && (0.0..=cap + 1e-12).contains(&e2.mean));
        prop_assert!(e2.mean <= e1.mean + 3.0 * (e1.stderr + e2.stderr) + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn branches_are_ordered_and_bounded(
        ch in channel_strategy(),
        kind in kind_strategy(),
        b in prop::sample::select(vec![2usize, 4, 8]),
        rate in 0.2f64..1.2,
    ) {
        let cfg = ReplicaConfig { mc_samples: 20_000, ..ReplicaConfig::default() };
        let p = analyze_rate(rate, b, &ch, &kind, &cfg).unwrap();
        let cap = 1.0 - 1.0 / b as f64;
        for o in [&p.informative, &p.uninformative] {
            prop_assert!((0.0..=1.0 / b as f64).contains(&o.q_x));
            prop_assert!((o.mse - (1.0 - b as f64 * o.q_x)).abs() < 1e-12);
            prop_assert!(o.mse <= cap + 1e-9);
            prop_assert!((0.0..=1.0).contains(&o.qh_z) && o.qh_x >= 0.0 && o.q_z >= 0.0);
            prop_assert!(o.phi.is_finite());
        }
        prop_assert!(p.informative.mse <= p.uninformative.mse * (1.0 + 1e-6) + 1e-12);
        if p.phase == Phase::Easy {
            prop_assert!(p.uninformative.mse - p.informative.mse <= 1e-6 * p.uninformative.mse.max(1.0));
        }
    }
}
