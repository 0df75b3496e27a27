//! Each channel: empirical corruption of a ±1 codeword, capacity, and the
//! posterior of one component given its observation.

use sscodes::channels::Channel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let chans = [Channel::bec(0.1)?, Channel::bsc(0.01)?, Channel::zc(0.05)?, Channel::awgn(10.0)?];
    let z: Vec<f64> = (0..100_000).map(|i| if i % 3 == 0 { -0.8 } else { 1.1 }).collect();
    for ch in &chans {
        let y = ch.transmit(&z, 3);
        let wrong = y.iter().zip(&z).filter(|(y, z)| **y * z.signum() < 0.0).count() as f64;
        let erased = y.iter().filter(|y| **y == 0.0).count() as f64;
        let n = z.len() as f64;
        let cap = ch.capacity().map_or("n/a".to_string(), |c| format!("{c:.5} bits"));
        println!("{ch}: sign errors {:.4}, erasures {:.4}, capacity {cap}", wrong / n, erased / n);
        let (mean, var) = ch.posterior_z_moments(y[0], 0.5, 2.0)?;
        println!("  z | y = {:+.2}, prior N(0.5, 1/2): mean {mean:+.4}, variance {var:.4}", y[0]);
    }
    Ok(())
}
