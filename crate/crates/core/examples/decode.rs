//! One GVAMP decoding run with the per-iteration section MSE.
//!
//! cargo run --release --example decode -- [rate] [L] [B] [seed]

use sscodes::channels::Channel;
use sscodes::code::{encode, sample_message, CodeParams};
use sscodes::ensembles::{Backend, SpectrumSpec};
use sscodes::gvamp::{decode, DecoderConfig, DecoderInit};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let rate: f64 = args.first().map_or(Ok(0.6), |s| s.parse())?;
    let l: usize = args.get(1).map_or(Ok(4096), |s| s.parse())?;
    let b: usize = args.get(2).map_or(Ok(8), |s| s.parse())?;
    let seed: u64 = args.get(3).map_or(Ok(1), |s| s.parse())?;

    let params = CodeParams::from_rate(l, b, rate)?;
    let ch = Channel::bsc(0.01)?;
    let a = SpectrumSpec::RowOrthogonal.sample(&params, seed, Backend::Auto)?;
    let msg = sample_message(&params, seed + 1);
    let y = ch.transmit(&encode(&params, &msg, &a)?, seed + 2);

    let cfg = DecoderConfig { max_iter: 500, ..DecoderConfig::default() };
    let res = decode(&params, &a, &y, &ch, &cfg, &DecoderInit::default(), Some(&msg))?;
    println!("{ch}, row-orthogonal, L={l}, B={b}, M={}, R={:.4}", params.m, params.rate);
    for (k, mse) in res.mse_trace.iter().enumerate() {
        println!("iter {:>3}  mse {mse:.3e}", k + 1);
    }
    println!(
        "converged: {} after {} iterations, SER {:.4}",
        res.converged,
        res.iterations,
        res.ser.unwrap_or(f64::NAN)
    );
    Ok(())
}
