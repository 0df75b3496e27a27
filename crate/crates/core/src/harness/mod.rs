//! Experiment driver behind the `sscodes` binary.
//!
//! Every command reads an [`ExperimentConfig`], fans independent work out on
//! the current rayon pool and writes its results in a fixed order, so a
//! given config and master seed always produce the same bytes. Progress goes
//! to stderr only.

pub mod config;
pub mod csv;

use std::fmt::Write as _;
use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::channels::Channel;
use crate::code::{encode, sample_message, CodeParams};
use crate::gvamp::{decode, DecoderInit};
use crate::replica::{analyze_rate, error_floor, large_b_rit, thresholds, Overlaps, SpectrumKind};
use crate::{Error, Result};

pub use config::{ChannelKind, ChannelSpec, EnsembleKind, ExperimentConfig, GridSection};
pub use csv::{Row, HEADER, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    DecodeSweep,
    ReplicaSweep,
    Thresholds,
    ErrorFloor,
    Capacity,
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mc_samples: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(n) = self.mc_samples {
            cfg.replica.mc_samples = n;
        }
        cfg.validate()
    }
}

/// Process exit status for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => 2,
        _ => 1,
    }
}

pub fn run<W: Write>(cmd: Command, cfg: &ExperimentConfig, out: &mut W) -> Result<()> {
    match cmd {
        Command::DecodeSweep => csv::write_rows(out, &decode_sweep(cfg)?),
        Command::ReplicaSweep => csv::write_rows(out, &replica_sweep(cfg)?),
        Command::Thresholds => {
            let cells = threshold_table(cfg)?;
            eprint!("{}", render_threshold_table(&cells));
            write_threshold_csv(out, &cells)
        }
        Command::ErrorFloor => Ok(out.write_all(error_floor_report(cfg)?.as_bytes())?),
        Command::Capacity => Ok(out.write_all(capacity_report(cfg)?.as_bytes())?),
    }
}

fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one decoding trial, a hash of its position in the sweep.
pub fn trial_seed(master: u64, rate_index: usize, trial_index: usize) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ rate_index as u64);
    splitmix64(h ^ (trial_index as u64).rotate_left(32))
}

/// Independent stream derived from a trial seed (matrix, message, noise).
fn stream(seed: u64, which: u64) -> u64 {
    splitmix64(seed ^ which.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Prints `label: done/total` to stderr about ten times per command.
struct Progress<'a> {
    label: &'a str,
    total: usize,
    done: AtomicUsize,
}

impl<'a> Progress<'a> {
    fn new(label: &'a str, total: usize) -> Self {
        Self { label, total, done: AtomicUsize::new(0) }
    }

    fn tick(&self) {
        let k = self.done.fetch_add(1, Ordering::Relaxed) + 1;
        if k == self.total || k.is_multiple_of((self.total / 10).max(1)) {
            eprintln!("{}: {k}/{}", self.label, self.total);
        }
    }
}

/// One decoding trial per (rate, trial) pair.
pub fn decode_sweep(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let ch = cfg.channel()?;
    let code = cfg.code()?;
    let l = code.l.ok_or_else(|| Error::Config("decode-sweep needs code.L".into()))?;
    let spec = cfg.spectrum_spec(cfg.ensemble.kind)?;
    let backend = cfg.backend();
    let rates = cfg.rates()?;
    let jobs: Vec<(usize, usize)> =
        (0..rates.len()).flat_map(|ri| (0..cfg.trials).map(move |ti| (ri, ti))).collect();
    let progress = Progress::new("decode-sweep", jobs.len());
    jobs.par_iter()
        .map(|&(ri, ti)| {
            let rate = rates[ri];
            let seed = trial_seed(cfg.seed, ri, ti);
            let wrap = |e: Error| Error::Trial { rate, trial: ti, source: Box::new(e) };
            let params = CodeParams::from_rate(l, code.b, rate).map_err(wrap)?;
            let run = || -> Result<Row> {
                let a = spec.sample(&params, stream(seed, 0), backend)?;
                let msg = sample_message(&params, stream(seed, 1));
                let z = encode(&params, &msg, &a)?;
                let y = ch.transmit(&z, stream(seed, 2));
                let res = decode(&params, &a, &y, &ch, &cfg.decoder, &DecoderInit::default(), Some(&msg))?;
                Ok(Row {
                    l: Some(l),
                    m: Some(params.m),
                    rate: params.rate,
                    seed,
                    trial: ti,
                    iterations: Some(res.iterations),
                    converged: Some(res.converged),
                    mse: res.mse,
                    ser: res.ser,
                    ..base_row(&ch, cfg.ensemble.kind, code.b)
                })
            };
            let row = run().map_err(wrap)?;
            progress.tick();
            Ok(row)
        })
        .collect()
}

fn base_row(ch: &Channel, ensemble: EnsembleKind, b: usize) -> Row {
    Row {
        channel: ch.kind().to_string(),
        epsilon: ch.parameter(),
        ensemble: ensemble.name().to_string(),
        b,
        ..Row::default()
    }
}

/// Both replica branches per rate: trial 0 is the uninformative start,
/// trial 1 the informative one. The phase is repeated on both rows.
pub fn replica_sweep(cfg: &ExperimentConfig) -> Result<Vec<Row>> {
    let ch = cfg.channel()?;
    let b = cfg.code()?.b;
    let kind = cfg.spectrum_kind(cfg.ensemble.kind)?;
    let rcfg = cfg.replica_config();
    let rates = cfg.rates()?;
    let progress = Progress::new("replica-sweep", rates.len());
    let points = rates
        .par_iter()
        .map(|&rate| {
            let p = analyze_rate(rate, b, &ch, &kind, &rcfg).map_err(|e| Error::Trial {
                rate,
                trial: 0,
                source: Box::new(e),
            })?;
            progress.tick();
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    let row = |rate: f64, trial: usize, o: &Overlaps, phase: &'static str| Row {
        rate,
        seed: cfg.seed,
        trial,
        iterations: Some(o.iterations),
        converged: Some(o.converged),
        mse: Some(o.mse),
        q_x: Some(o.q_x),
        q_z: Some(o.q_z),
        qh_x: Some(o.qh_x),
        qh_z: Some(o.qh_z),
        phi: Some(o.phi),
        phase: Some(phase),
        mc_stderr: Some(o.phi_stderr),
        ..base_row(&ch, cfg.ensemble.kind, b)
    };
    Ok(points
        .iter()
        .flat_map(|p| {
            let phase = p.phase.as_str();
            [row(p.rate, 0, &p.uninformative, phase), row(p.rate, 1, &p.informative, phase)]
        })
        .collect())
}

/// One (channel, B, ensemble) combination of a grid section.
#[derive(Debug, Clone)]
pub struct Cell {
    pub channel: Channel,
    pub b: usize,
    pub ensemble: EnsembleKind,
    pub kind: SpectrumKind,
}

/// Expands a grid section. Empty lists fall back to `[channel]`,
/// `code.B` and `ensemble.kind`.
pub fn cells(cfg: &ExperimentConfig, grid: &GridSection, need_b: bool) -> Result<Vec<Cell>> {
    let channels = if grid.channels.is_empty() {
        vec![cfg.channel()?]
    } else {
        grid.channels.iter().map(ChannelSpec::build).collect::<Result<_>>()?
    };
    let bs = if !grid.b.is_empty() {
        grid.b.clone()
    } else if need_b {
        vec![cfg.code()?.b]
    } else {
        vec![]
    };
    let ensembles = if grid.ensembles.is_empty() { vec![cfg.ensemble.kind] } else { grid.ensembles.clone() };
    let mut out = Vec::new();
    for ch in &channels {
        for &e in &ensembles {
            let kind = cfg.spectrum_kind(e)?;
            // Capacity reports want one entry per (channel, ensemble) even without B.
            let list = if bs.is_empty() { vec![0] } else { bs.clone() };
            for &b in &list {
                out.push(Cell { channel: *ch, b, ensemble: e, kind: kind.clone() });
            }
        }
    }
    Ok(out)
}

#[derive(Debug)]
pub struct ThresholdCell {
    pub cell: Cell,
    pub result: Result<crate::replica::Thresholds>,
}

fn section<'a>(s: &'a Option<GridSection>, name: &str) -> Result<&'a GridSection> {
    s.as_ref().ok_or_else(|| Error::Config(format!("missing [{name}]")))
}

/// Thresholds for every cell; a failing cell does not stop the others.
pub fn threshold_table(cfg: &ExperimentConfig) -> Result<Vec<ThresholdCell>> {
    let grid = section(&cfg.thresholds, "thresholds")?;
    let list = cells(cfg, grid, true)?;
    Ok(threshold_cells(cfg, list, grid.r_lo, grid.r_hi, "thresholds"))
}

fn threshold_cells(
    cfg: &ExperimentConfig,
    list: Vec<Cell>,
    r_lo: f64,
    r_hi: f64,
    label: &str,
) -> Vec<ThresholdCell> {
    let rcfg = cfg.replica_config();
    let progress = Progress::new(label, list.len());
    list.into_par_iter()
        .map(|cell| {
            let result = thresholds(&cell.channel, cell.b, &cell.kind, r_lo, r_hi, &rcfg);
            progress.tick();
            ThresholdCell { cell, result }
        })
        .collect()
}

fn status(r: &Result<crate::replica::Thresholds>) -> &'static str {
    match r {
        Ok(_) => "ok",
        Err(Error::Bracket(_)) => "bracket",
        Err(_) => "error",
    }
}

pub const THRESHOLD_HEADER: [&str; 10] = [
    "schema_version",
    "channel",
    "epsilon",
    "ensemble",
    "B",
    "r_gvamp",
    "r_it",
    "mse_below",
    "mse_above",
    "status",
];

pub fn write_threshold_csv<W: Write>(w: &mut W, cells: &[ThresholdCell]) -> Result<()> {
    csv::write_header(w, &THRESHOLD_HEADER)?;
    for c in cells {
        let nums = match &c.result {
            Ok(t) => [t.r_gvamp, t.r_it, t.mse_below, t.mse_above].map(csv::float),
            Err(_) => Default::default(),
        };
        writeln!(
            w,
            "{SCHEMA_VERSION},{},{},{},{},{},{}",
            c.cell.channel.kind(),
            csv::float(c.cell.channel.parameter()),
            c.cell.ensemble.name(),
            c.cell.b,
            nums.join(","),
            status(&c.result)
        )?;
    }
    Ok(())
}

/// Rows per (channel, ensemble), one `R_GVAMP R_IT` pair per section size.
pub fn render_threshold_table(cells: &[ThresholdCell]) -> String {
    let mut bs: Vec<usize> = cells.iter().map(|c| c.cell.b).collect();
    bs.sort_unstable();
    bs.dedup();
    let mut s = format!("{:<12} {:<15}", "channel", "ensemble");
    for b in &bs {
        let _ = write!(s, " {:>15}", format!("B={b}"));
    }
    s.push('\n');
    let mut seen: Vec<(String, EnsembleKind)> = Vec::new();
    for c in cells {
        let key = (c.cell.channel.to_string(), c.cell.ensemble);
        if seen.contains(&key) {
            continue;
        }
        let _ = write!(s, "{:<12} {:<15}", key.0, key.1.name());
        for b in &bs {
            let hit = cells
                .iter()
                .find(|d| d.cell.b == *b && d.cell.ensemble == key.1 && d.cell.channel.to_string() == key.0);
            let text = match hit.map(|d| &d.result) {
                Some(Ok(t)) => format!("{:.3} {:.3}", t.r_gvamp, t.r_it),
                Some(r @ Err(e)) => {
                    eprintln!("{} {} B={b}: {e}", key.0, key.1.name());
                    status(r).to_string()
                }
                None => "-".to_string(),
            };
            let _ = write!(s, " {text:>15}");
        }
        s.push('\n');
        seen.push(key);
    }
    s
}

/// Informative-branch error floor for every cell at the section's rate.
pub fn error_floor_report(cfg: &ExperimentConfig) -> Result<String> {
    let grid = section(&cfg.error_floor, "error_floor")?;
    let rate = grid.rate.ok_or_else(|| Error::Config("error_floor needs `rate`".into()))?;
    let list = cells(cfg, grid, true)?;
    let rcfg = cfg.replica_config();
    let progress = Progress::new("error-floor", list.len());
    let floors = list
        .par_iter()
        .map(|c| {
            let f = error_floor(rate, c.b, &c.channel, &c.kind, &rcfg).map_err(|e| Error::Trial {
                rate,
                trial: 0,
                source: Box::new(e),
            });
            progress.tick();
            f
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut s = format!("# informative-branch error floor at R = {rate}\n");
    let _ = writeln!(s, "{:<12} {:<15} {:>3} {:>24}  vs 1e-6", "channel", "ensemble", "B", "E_f");
    for (c, f) in list.iter().zip(&floors) {
        let verdict = if *f < 1e-6 { "below" } else { "above" };
        let _ = writeln!(
            s,
            "{:<12} {:<15} {:>3} {:>24}  {verdict}",
            c.channel.to_string(),
            c.ensemble.name(),
            c.b,
            csv::float(*f)
        );
    }
    Ok(s)
}

/// Channel capacity, the large-B limit of `R_IT` per ensemble and, for the
/// listed section sizes, the finite-B thresholds approaching it.
pub fn capacity_report(cfg: &ExperimentConfig) -> Result<String> {
    let grid = section(&cfg.capacity, "capacity")?;
    let pairs: Vec<Cell> = cells(cfg, &GridSection { b: vec![], ..grid.clone() }, false)?;
    let rcfg = cfg.replica_config();
    let limits =
        pairs.par_iter().map(|c| large_b_rit(&c.channel, &c.kind, &rcfg)).collect::<Result<Vec<_>>>()?;
    let mut s = String::from("# large-B limit\n");
    let _ = writeln!(
        s,
        "{:<12} {:<15} {:>14} {:>14} {:>14}",
        "channel", "ensemble", "C [bits]", "R_IT limit", "epsilon_rho"
    );
    for (c, lim) in pairs.iter().zip(&limits) {
        let _ = writeln!(
            s,
            "{:<12} {:<15} {:>14.9} {:>14.9} {:>14.9}",
            c.channel.to_string(),
            c.ensemble.name(),
            lim.capacity,
            lim.r_it_limit,
            lim.epsilon_rho
        );
    }
    if !grid.b.is_empty() {
        let trend = threshold_cells(cfg, cells(cfg, grid, true)?, grid.r_lo, grid.r_hi, "capacity");
        s.push_str("\n# finite-B thresholds\n");
        let _ = writeln!(s, "{:<12} {:<15} {:>3} {:>9} {:>9}", "channel", "ensemble", "B", "R_GVAMP", "R_IT");
        for t in &trend {
            let (g, i) = match &t.result {
                Ok(r) => (format!("{:.4}", r.r_gvamp), format!("{:.4}", r.r_it)),
                Err(e) => {
                    eprintln!("{} {} B={}: {e}", t.cell.channel, t.cell.ensemble.name(), t.cell.b);
                    (status(&t.result).to_string(), String::new())
                }
            };
            let _ = writeln!(
                s,
                "{:<12} {:<15} {:>3} {g:>9} {i:>9}",
                t.cell.channel.to_string(),
                t.cell.ensemble.name(),
                t.cell.b
            );
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_seeds_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..20 {
            for t in 0..20 {
                assert!(seen.insert(trial_seed(7, r, t)));
            }
        }
        assert_ne!(trial_seed(7, 0, 0), trial_seed(8, 0, 0));
    }
}
