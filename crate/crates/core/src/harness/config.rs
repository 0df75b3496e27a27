//! Experiment configuration, read from TOML. Unknown keys are errors.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::channels::Channel;
use crate::ensembles::{Backend, SpectralLaw, SpectrumSpec};
use crate::gvamp::DecoderConfig;
use crate::replica::{ReplicaConfig, SpectrumKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every trial seed and the replica Monte Carlo seed derive from it.
    #[serde(default)]
    pub seed: u64,
    /// Trials per rate in decode sweeps.
    #[serde(default = "one")]
    pub trials: usize,
    pub channel: Option<ChannelSpec>,
    pub code: Option<CodeSection>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub decoder: DecoderConfig,
    #[serde(default)]
    pub replica: ReplicaConfig,
    pub sweep: Option<SweepSection>,
    pub thresholds: Option<GridSection>,
    pub error_floor: Option<GridSection>,
    pub capacity: Option<GridSection>,
    /// Directory of the config file, for relative paths.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    pub epsilon: Option<f64>,
    pub snr: Option<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Bec,
    Bsc,
    Zc,
    Awgn,
}

impl ChannelSpec {
    pub fn build(&self) -> Result<Channel> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::Config(format!("channel {:?} needs `{name}`", self.kind)))
        };
        let extra = |v: Option<f64>, name: &str| match v {
            Some(_) => Err(Error::Config(format!("channel {:?} does not take `{name}`", self.kind))),
            None => Ok(()),
        };
        let ch = match self.kind {
            ChannelKind::Awgn => {
                extra(self.epsilon, "epsilon")?;
                Channel::awgn(need(self.snr, "snr")?)
            }
            kind => {
                extra(self.snr, "snr")?;
                let e = need(self.epsilon, "epsilon")?;
                match kind {
                    ChannelKind::Bec => Channel::bec(e),
                    ChannelKind::Bsc => Channel::bsc(e),
                    _ => Channel::zc(e),
                }
            }
        };
        ch.map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodeSection {
    #[serde(rename = "B")]
    pub b: usize,
    /// Number of sections; only decode sweeps need it.
    #[serde(rename = "L")]
    pub l: Option<usize>,
    /// Single rate when there is no `[sweep]`.
    pub rate: Option<f64>,
    /// Single number of rows when there is no `[sweep]` (alternative to `rate`).
    #[serde(rename = "M")]
    pub m: Option<usize>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    GaussianIid,
    #[default]
    RowOrthogonal,
    Custom,
}

impl EnsembleKind {
    pub fn name(&self) -> &'static str {
        match self {
            EnsembleKind::GaussianIid => "gaussian-iid",
            EnsembleKind::RowOrthogonal => "row-orthogonal",
            EnsembleKind::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
pub enum BackendName {
    #[default]
    Auto,
    Dense,
    Fast,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default)]
    pub kind: EnsembleKind,
    /// Text file of nonzero eigenvalues (`value` or `value weight` per line,
    /// `#` comments), for the custom ensemble.
    pub spectrum_file: Option<PathBuf>,
    /// Inline alternative to `spectrum_file`.
    pub atoms: Option<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub backend: BackendName,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub r_step: Option<f64>,
    /// Explicit rates, instead of the range.
    pub rates: Option<Vec<f64>>,
}

/// A grid of (channel, B, ensemble) cells.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default)]
    pub channels: Vec<ChannelSpec>,
    #[serde(default, rename = "B")]
    pub b: Vec<usize>,
    #[serde(default)]
    pub ensembles: Vec<EnsembleKind>,
    /// Rate bracket for threshold searches.
    #[serde(default = "default_r_lo")]
    pub r_lo: f64,
    #[serde(default = "default_r_hi")]
    pub r_hi: f64,
    /// Rate at which error floors are evaluated.
    pub rate: Option<f64>,
}

fn default_r_lo() -> f64 {
    0.2
}

fn default_r_hi() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        self.decoder.validate().map_err(cfg_err)?;
        self.replica.validate().map_err(cfg_err)?;
        if let Some(ch) = &self.channel {
            ch.build()?;
        }
        if let Some(code) = &self.code {
            if code.b < 2 || code.l == Some(0) {
                return Err(Error::Config("code needs B >= 2 and L >= 1".into()));
            }
            if code.rate.is_some() && code.m.is_some() {
                return Err(Error::Config("give either code.rate or code.M, not both".into()));
            }
        }
        if let Some(s) = &self.sweep {
            s.rates()?;
        }
        for grid in [&self.thresholds, &self.error_floor, &self.capacity].into_iter().flatten() {
            for ch in &grid.channels {
                ch.build()?;
            }
            if !(0.0 < grid.r_lo && grid.r_lo < grid.r_hi) {
                return Err(Error::Config(format!(
                    "need 0 < r_lo < r_hi, got [{}, {}]",
                    grid.r_lo, grid.r_hi
                )));
            }
            if grid.b.iter().any(|&b| b < 2) {
                return Err(Error::Config("section sizes must be >= 2".into()));
            }
        }
        let custom_used = self.ensemble.kind == EnsembleKind::Custom
            || [&self.thresholds, &self.error_floor, &self.capacity]
                .into_iter()
                .flatten()
                .any(|g| g.ensembles.contains(&EnsembleKind::Custom));
        if custom_used {
            self.custom_law()?;
        }
        Ok(())
    }

    pub fn channel(&self) -> Result<Channel> {
        self.channel.as_ref().ok_or_else(|| Error::Config("missing [channel]".into()))?.build()
    }

    pub fn code(&self) -> Result<&CodeSection> {
        self.code.as_ref().ok_or_else(|| Error::Config("missing [code]".into()))
    }

    pub fn backend(&self) -> Backend {
        match self.ensemble.backend {
            BackendName::Auto => Backend::Auto,
            BackendName::Dense => Backend::Dense,
            BackendName::Fast => Backend::Fast,
        }
    }

    /// Replica settings with the Monte Carlo seed taken from the master seed.
    pub fn replica_config(&self) -> ReplicaConfig {
        ReplicaConfig { seed: self.seed, ..self.replica.clone() }
    }

    /// Law of nonzero eigenvalues for the custom ensemble.
    pub fn custom_law(&self) -> Result<SpectralLaw> {
        let e = &self.ensemble;
        let (atoms, weights) = match (&e.spectrum_file, &e.atoms) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give either ensemble.spectrum_file or ensemble.atoms".into()))
            }
            (Some(path), None) => read_spectrum(&self.base_dir.join(path))?,
            (None, Some(atoms)) => {
                let w = e.weights.clone().unwrap_or_else(|| vec![1.0; atoms.len()]);
                (atoms.clone(), w)
            }
            (None, None) => {
                return Err(Error::Config(
                    "custom ensemble needs ensemble.spectrum_file or ensemble.atoms".into(),
                ))
            }
        };
        SpectralLaw::from_weighted(atoms, weights).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn spectrum_spec(&self, kind: EnsembleKind) -> Result<SpectrumSpec> {
        Ok(match kind {
            EnsembleKind::GaussianIid => SpectrumSpec::GaussianIid,
            EnsembleKind::RowOrthogonal => SpectrumSpec::RowOrthogonal,
            EnsembleKind::Custom => SpectrumSpec::Custom(self.custom_law()?),
        })
    }

    pub fn spectrum_kind(&self, kind: EnsembleKind) -> Result<SpectrumKind> {
        Ok(match kind {
            EnsembleKind::GaussianIid => SpectrumKind::Mp,
            EnsembleKind::RowOrthogonal => SpectrumKind::RowOrthogonal,
            EnsembleKind::Custom => SpectrumKind::Custom(self.custom_law()?),
        })
    }

    /// Rates of a sweep, or the single rate of `[code]`.
    pub fn rates(&self) -> Result<Vec<f64>> {
        if let Some(s) = &self.sweep {
            return s.rates();
        }
        let code = self.code()?;
        match (code.rate, code.m) {
            (Some(r), None) => Ok(vec![r]),
            (None, Some(m)) => {
                let l = code.l.ok_or_else(|| Error::Config("code.M needs code.L".into()))?;
                Ok(vec![l as f64 * (code.b as f64).log2() / m as f64])
            }
            _ => Err(Error::Config("need [sweep], code.rate or code.M".into())),
        }
    }
}

impl SweepSection {
    pub fn rates(&self) -> Result<Vec<f64>> {
        let rates = match (&self.rates, self.r_min, self.r_max, self.r_step) {
            (Some(list), None, None, None) => list.clone(),
            (None, Some(lo), Some(hi), Some(step)) => {
                if !(lo < hi) || !(step > 0.0) {
                    return Err(Error::Config(format!(
                        "sweep needs r_min < r_max and r_step > 0, got {lo}, {hi}, {step}"
                    )));
                }
                let n = ((hi - lo) / step + 1e-9).floor() as usize;
                (0..=n).map(|i| lo + i as f64 * step).collect()
            }
            _ => {
                return Err(Error::Config("sweep needs either `rates` or all of r_min, r_max, r_step".into()))
            }
        };
        if rates.is_empty() || rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config("sweep rates must be positive".into()));
        }
        Ok(rates)
    }
}

fn read_spectrum(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read spectrum {}: {e}", path.display())))?;
    let mut atoms = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Config(format!("{}:{}: expected `value [weight]`", path.display(), i + 1));
        let mut parts = line.split_whitespace().map(str::parse::<f64>);
        let v = parts.next().ok_or_else(bad)?.map_err(|_| bad())?;
        let w = parts.next().transpose().map_err(|_| bad())?.unwrap_or(1.0);
        if parts.next().is_some() {
            return Err(bad());
        }
        atoms.push(v);
        weights.push(w);
    }
    Ok((atoms, weights))
}
