//! Draws one matrix per ensemble, prints its spectrum moments and round-trips
//! the factors through the binary dump format.

use sscodes::code::CodeParams;
use sscodes::ensembles::{load_factors, save_factors, Backend, SpectralLaw, SpectrumSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = CodeParams::from_rate(256, 4, 0.7)?;
    let specs = [
        ("gaussian-iid", SpectrumSpec::GaussianIid),
        ("row-orthogonal", SpectrumSpec::RowOrthogonal),
        ("custom {0.5, 1.5}", SpectrumSpec::Custom(SpectralLaw::from_atoms(vec![0.5, 1.5])?)),
    ];
    println!("M = {}, N = {}, alpha = {:.4}", params.m, params.n, params.alpha);
    for (name, spec) in &specs {
        let a = spec.sample(&params, 7, Backend::Dense)?;
        let ev: Vec<f64> = a.sigma().iter().map(|s| s * s / params.b as f64).collect();
        let k = ev.len() as f64;
        let m1 = ev.iter().sum::<f64>() / k;
        let m2 = ev.iter().map(|e| e * e).sum::<f64>() / k;
        let (lo, hi) = ev.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &e| (l.min(e), h.max(e)));
        println!("{name:<18} eig(AᵀA/B): mean {m1:.4}  second moment {m2:.4}  range [{lo:.3}, {hi:.3}]");

        let mut bytes = Vec::new();
        save_factors(&a, &mut bytes)?;
        let back = load_factors(bytes.as_slice())?;
        let same = back.to_dense().iter().zip(a.to_dense()).all(|(x, y)| (x - y).abs() < 1e-12);
        println!("{:<18} dump: {} bytes, round trip exact: {same}", "", bytes.len());
    }
    Ok(())
}
