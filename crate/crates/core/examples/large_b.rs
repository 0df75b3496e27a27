//! Large-section-size limit: which spectral families reach capacity.

use sscodes::channels::Channel;
use sscodes::ensembles::SpectralLaw;
use sscodes::replica::{large_b_rit, ReplicaConfig, SpectrumKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ReplicaConfig::default();
    let families = [
        ("gaussian-iid", SpectrumKind::Mp),
        ("row-orthogonal", SpectrumKind::RowOrthogonal),
        ("two atoms 0.5/1.5", SpectrumKind::Custom(SpectralLaw::from_atoms(vec![0.5, 1.5])?)),
        ("uniform [0.2, 1.8]", SpectrumKind::Custom(SpectralLaw::uniform(0.2, 1.8, 24)?)),
    ];
    for ch in [Channel::bec(0.1)?, Channel::bsc(0.01)?, Channel::zc(0.05)?] {
        for (name, kind) in &families {
            let lim = large_b_rit(&ch, kind, &cfg)?;
            println!(
                "{:<10} {name:<20} C = {:.5}  R_IT -> {:.5}  eps = {:.5}",
                ch.to_string(),
                lim.capacity,
                lim.r_it_limit,
                lim.epsilon_rho
            );
        }
    }
    Ok(())
}
