use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sscodes::harness::{self, Command, ExperimentConfig, Overrides};
use sscodes::{Error, Result};

/// Sparse superposition code experiments: finite-size decoding sweeps and
/// replica predictions.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output if absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Replica Monte Carlo sample count (overrides the config).
    #[arg(long, global = true)]
    mc_samples: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// GVAMP decoding trials over a range of rates (CSV).
    DecodeSweep,
    /// Replica fixed points over a range of rates (CSV).
    ReplicaSweep,
    /// Algorithmic and information-theoretic thresholds (CSV, table on stderr).
    Thresholds,
    /// Informative-branch error floors (text).
    ErrorFloor,
    /// Capacity, large-B limit and R_IT trend (text).
    Capacity,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::DecodeSweep => Command::DecodeSweep,
            Cmd::ReplicaSweep => Command::ReplicaSweep,
            Cmd::Thresholds => Command::Thresholds,
            Cmd::ErrorFloor => Command::ErrorFloor,
            Cmd::Capacity => Command::Capacity,
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    Overrides { seed: cli.seed, mc_samples: cli.mc_samples }.apply(&mut cfg)?;
    if cli.threads == Some(0) {
        return Err(Error::Config("--threads must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    // Compute everything before touching the output file.
    let mut buf = Vec::new();
    pool.install(|| harness::run(cli.command.into(), &cfg, &mut buf))?;
    match &cli.out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            w.write_all(&buf)?;
            w.flush()?;
        }
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(harness::exit_code(&e) as u8)
        }
    }
}
