//! Both stationary branches of the replica potential across a range of
//! rates, with the resulting phase.
//!
//! cargo run --release --example replica_sweep -- [B]

use sscodes::channels::Channel;
use sscodes::replica::{analyze_rate, ReplicaConfig, SpectrumKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b: usize = std::env::args().nth(1).map_or(Ok(8), |s| s.parse())?;
    let ch = Channel::bsc(0.01)?;
    let cfg = ReplicaConfig::default();
    println!("{ch}, row-orthogonal, B={b}");
    println!("{:>5} {:>12} {:>12} {:>10} {:>10}  phase", "R", "mse (un)", "mse (in)", "phi (un)", "phi (in)");
    for i in 0..=10 {
        let rate = 0.5 + 0.04 * i as f64;
        let p = analyze_rate(rate, b, &ch, &SpectrumKind::RowOrthogonal, &cfg)?;
        println!(
            "{rate:>5.2} {:>12.4e} {:>12.4e} {:>10.5} {:>10.5}  {}",
            p.uninformative.mse,
            p.informative.mse,
            p.uninformative.phi,
            p.informative.phi,
            p.phase.as_str()
        );
    }
    Ok(())
}
