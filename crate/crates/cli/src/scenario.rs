//! Scenario files: one TOML document describing where η comes from, the gate
//! hardware and the sampling parameters. Command-line flags are merged on
//! top, flags winning.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use homgate::measurement::CountModel;
use homgate::waveform::{
    apply_window, best_alignment, delay, overlap_eta, preset_memory_waveform, preset_source_waveform,
    DEFAULT_WINDOW_OFFSET,
};
use homgate::{GateConfig, NoiseConfig, TemporalWaveform, TimeGrid, WindowConfig};
use serde::Deserialize;

use crate::CliError;

pub const DEFAULT_SHOTS: u64 = 1_000_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_MAX_SHIFT: f64 = 5e-9;
pub const DEFAULT_SWEEP: [f64; 8] = [0.5e-9, 1e-9, 1.5e-9, 2e-9, 3e-9, 4e-9, 6e-9, 10e-9];

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub noise: Option<f64>,
    pub noise_model: Option<NoiseModelKey>,
    pub eta: Option<f64>,
    pub gate: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub waveforms: Option<WaveformKeys>,
    #[serde(default)]
    pub window: WindowKeys,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModelKey {
    Multinomial,
    Poisson,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveformKeys {
    /// `"preset"` or a CSV path with columns `time_s,re,im`.
    pub memory: Option<String>,
    pub source: Option<String>,
    /// Shift the source onto the memory photon before anything else.
    pub align: Option<bool>,
    pub max_shift_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowKeys {
    pub offset_s: Option<f64>,
    pub tau_int_s: Option<f64>,
    pub sweep_s: Option<Vec<f64>>,
}

/// Flag values that override the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub eta: Option<f64>,
    pub noise: Option<f64>,
    pub shots: Option<u64>,
    pub tau_int: Option<f64>,
    pub offset: Option<f64>,
}

#[derive(Debug, Clone)]
pub enum WaveformSource {
    Preset,
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct WaveformPair {
    pub memory: WaveformSource,
    pub source: WaveformSource,
    pub align: bool,
    pub max_shift: f64,
}

/// Where the indistinguishability comes from.
#[derive(Debug, Clone)]
pub enum EtaInput {
    Fixed(f64),
    Waveforms(WaveformPair),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub seed: u64,
    pub shots: u64,
    pub noise: NoiseConfig,
    pub gate: GateConfig,
    pub out: Option<PathBuf>,
    pub eta: EtaInput,
    pub window_offset: f64,
    pub tau_int: Option<f64>,
    pub sweep: Vec<f64>,
}

/// Both photons after alignment, and optionally after the window.
pub struct PreparedPair {
    pub memory: TemporalWaveform,
    pub source: TemporalWaveform,
    pub alignment_delay: f64,
}

impl Scenario {
    pub fn load(path: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let (file, base) = match path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Validation(format!("reading {}: {e}", p.display())))?;
                let file: ScenarioFile = toml::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?;
                (file, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (ScenarioFile::default(), PathBuf::new()),
        };
        Self::resolve(file, &base, flags)
    }

    fn resolve(file: ScenarioFile, base: &Path, flags: &Overrides) -> Result<Self> {
        if file.eta.is_some() && file.waveforms.is_some() {
            return Err(CliError::Validation("`eta` and `[waveforms]` are mutually exclusive".into()).into());
        }
        let gate = match &file.gate {
            Some(p) => {
                let p = existing(base, p)?;
                let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                GateConfig::from_toml_str(&text)?
            }
            None => GateConfig::ideal(),
        };
        let eta = match (flags.eta.or(file.eta), file.waveforms) {
            (Some(eta), _) => {
                if !(0.0..=1.0).contains(&eta) {
                    return Err(CliError::Validation(format!("eta = {eta} outside [0, 1]")).into());
                }
                EtaInput::Fixed(eta)
            }
            (None, keys) => {
                let keys = keys.unwrap_or_default();
                let source_of = |key: Option<String>| -> Result<WaveformSource> {
                    match key.as_deref() {
                        None | Some("preset") => Ok(WaveformSource::Preset),
                        Some(p) => Ok(WaveformSource::File(existing(base, Path::new(p))?)),
                    }
                };
                EtaInput::Waveforms(WaveformPair {
                    memory: source_of(keys.memory)?,
                    source: source_of(keys.source)?,
                    align: keys.align.unwrap_or(true),
                    max_shift: keys.max_shift_s.unwrap_or(DEFAULT_MAX_SHIFT),
                })
            }
        };
        let noise_eps = flags.noise.or(file.noise).unwrap_or(0.0);
        if !(0.0..=1.0).contains(&noise_eps) {
            return Err(CliError::Validation(format!("noise = {noise_eps} outside [0, 1]")).into());
        }
        let model = match file.noise_model {
            Some(NoiseModelKey::Poisson) => CountModel::Poisson,
            _ => CountModel::Multinomial,
        };
        let shots = flags.shots.or(file.shots).unwrap_or(DEFAULT_SHOTS);
        if shots == 0 {
            return Err(CliError::Validation("shots must be positive".into()).into());
        }
        let sweep = file.window.sweep_s.unwrap_or_else(|| DEFAULT_SWEEP.to_vec());
        if sweep.is_empty() || sweep.iter().any(|t| !(*t > 0.0)) {
            return Err(CliError::Validation("window sweep needs positive durations".into()).into());
        }
        let tau_int = flags.tau_int.or(file.window.tau_int_s);
        if let Some(t) = tau_int {
            WindowConfig::new(0.0, t)?;
        }
        Ok(Scenario {
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            shots,
            noise: NoiseConfig { epsilon: noise_eps, model },
            gate,
            out: flags.out.clone().or(file.out.map(|p| base.join(p))),
            eta,
            window_offset: flags.offset.or(file.window.offset_s).unwrap_or(DEFAULT_WINDOW_OFFSET),
            tau_int,
            sweep,
        })
    }

    pub fn window(&self, tau_int: f64) -> Result<WindowConfig> {
        Ok(WindowConfig::new(self.window_offset, tau_int)?)
    }

    /// Loads both photons and aligns the source onto the memory photon.
    pub fn waveforms(&self) -> Result<PreparedPair> {
        let pair = match &self.eta {
            EtaInput::Waveforms(p) => p,
            EtaInput::Fixed(_) => {
                return Err(CliError::Validation("this command needs waveforms, not a fixed eta".into()).into())
            }
        };
        let grid = TimeGrid::standard();
        let load = |s: &WaveformSource, preset: fn(&TimeGrid) -> homgate::Result<TemporalWaveform>| -> Result<TemporalWaveform> {
            match s {
                WaveformSource::Preset => Ok(preset(&grid)?),
                WaveformSource::File(p) => {
                    let f = fs::File::open(p).with_context(|| format!("opening {}", p.display()))?;
                    Ok(TemporalWaveform::read_csv(f)?)
                }
            }
        };
        let memory = load(&pair.memory, preset_memory_waveform)?;
        let mut source = load(&pair.source, preset_source_waveform)?;
        let mut alignment_delay = 0.0;
        if pair.align {
            let (d, _) = best_alignment(&memory, &source, pair.max_shift)?;
            source = delay(&source, d)?;
            alignment_delay = d;
        }
        Ok(PreparedPair { memory, source, alignment_delay })
    }

    /// The overlap used by gate commands: fixed, or from the (windowed) waveforms.
    pub fn eta(&self) -> Result<f64> {
        match &self.eta {
            EtaInput::Fixed(eta) => Ok(*eta),
            EtaInput::Waveforms(_) => {
                let pair = self.waveforms()?;
                match self.tau_int {
                    Some(t) => {
                        let w = self.window(t)?;
                        let (m, _) = apply_window(&pair.memory, &w)?;
                        let (s, _) = apply_window(&pair.source, &w)?;
                        Ok(overlap_eta(&m, &s)?)
                    }
                    None => Ok(overlap_eta(&pair.memory, &pair.source)?),
                }
            }
        }
    }
}

fn existing(base: &Path, p: &Path) -> Result<PathBuf> {
    let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    if !full.exists() {
        return Err(CliError::Validation(format!("file not found: {}", full.display())).into());
    }
    Ok(full)
}
