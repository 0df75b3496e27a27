//! Row format shared by decode and replica sweeps.

use std::io::Write;

use crate::Result;

pub const SCHEMA_VERSION: u32 = 1;

pub const HEADER: [&str; 21] = [
    "schema_version",
    "channel",
    "epsilon",
    "ensemble",
    "B",
    "L",
    "M",
    "rate",
    "seed",
    "trial",
    "iterations",
    "converged",
    "mse",
    "ser",
    "q_x",
    "q_z",
    "qh_x",
    "qh_z",
    "phi",
    "phase",
    "mc_stderr",
];

/// One CSV record. `None` fields are written empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub channel: String,
    /// Channel parameter: `epsilon`, or the SNR for AWGN.
    pub epsilon: f64,
    pub ensemble: String,
    pub b: usize,
    pub l: Option<usize>,
    pub m: Option<usize>,
    pub rate: f64,
    pub seed: u64,
    pub trial: usize,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub mse: Option<f64>,
    pub ser: Option<f64>,
    pub q_x: Option<f64>,
    pub q_z: Option<f64>,
    pub qh_x: Option<f64>,
    pub qh_z: Option<f64>,
    pub phi: Option<f64>,
    pub phase: Option<&'static str>,
    pub mc_stderr: Option<f64>,
}

/// 17 significant digits, so values survive a round trip.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

impl Row {
    pub fn fields(&self) -> Vec<String> {
        vec![
            SCHEMA_VERSION.to_string(),
            self.channel.clone(),
            float(self.epsilon),
            self.ensemble.clone(),
            self.b.to_string(),
            opt(self.l, |v| v.to_string()),
            opt(self.m, |v| v.to_string()),
            float(self.rate),
            self.seed.to_string(),
            self.trial.to_string(),
            opt(self.iterations, |v| v.to_string()),
            opt(self.converged, |v| v.to_string()),
            opt(self.mse, float),
            opt(self.ser, float),
            opt(self.q_x, float),
            opt(self.q_z, float),
            opt(self.qh_x, float),
            opt(self.qh_z, float),
            opt(self.phi, float),
            opt(self.phase, str::to_string),
            opt(self.mc_stderr, float),
        ]
    }
}

pub fn write_header<W: Write>(w: &mut W, header: &[&str]) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    Ok(())
}

pub fn write_rows<W: Write>(w: &mut W, rows: &[Row]) -> Result<()> {
    write_header(w, &HEADER)?;
    for row in rows {
        writeln!(w, "{}", row.fields().join(","))?;
    }
    Ok(())
}
