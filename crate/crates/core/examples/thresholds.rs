//! Algorithmic and information-theoretic thresholds for one channel.
//!
//! cargo run --release --example thresholds -- bsc 0.01 8 row-orthogonal [mc-samples] [seed]

use std::time::Instant;

use sscodes::channels::Channel;
use sscodes::replica::{thresholds, ReplicaConfig, SpectrumKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = args.first().map_or("bec", String::as_str);
    let p: f64 = args.get(1).map_or(Ok(0.1), |s| s.parse())?;
    let b: usize = args.get(2).map_or(Ok(2), |s| s.parse())?;
    let ens = match args.get(3).map_or("gaussian-iid", String::as_str) {
        "row-orthogonal" => SpectrumKind::RowOrthogonal,
        _ => SpectrumKind::Mp,
    };
    let ch = match kind {
        "bsc" => Channel::bsc(p)?,
        "zc" => Channel::zc(p)?,
        _ => Channel::bec(p)?,
    };
    let mut cfg = ReplicaConfig::default();
    if let Some(n) = args.get(4) {
        cfg.mc_samples = n.parse()?;
    }
    if let Some(s) = args.get(5) {
        cfg.seed = s.parse()?;
    }
    let t0 = Instant::now();
    let t = thresholds(&ch, b, &ens, 0.2, 1.0, &cfg)?;
    println!(
        "{ch} B={b} {}: R_GVAMP = {:.3}, R_IT = {:.3} (mse jump {:.1e} -> {:.3}) in {:.1?}",
        ens.name(),
        t.r_gvamp,
        t.r_it,
        t.mse_below,
        t.mse_above,
        t0.elapsed()
    );
    Ok(())
}
