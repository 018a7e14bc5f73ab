//! Run configuration: built-in preset, then an optional TOML key-value file,
//! then command-line flags, each layer overriding the previous one.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::Deserialize;
use weakrand_qkd::{BoundMethod, ChannelParams, RandomnessFlaw, SourceSpec};

use crate::UsageError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// GYS field-trial parameters (s = 0.48, Y0 = 1.7e-6, e0 = 0.5, 0.21 dB/km,
    /// η_Bob = 0.045, e_det = 0.033, f = 1.22).
    Gys,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    Sps,
    Wps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Original,
    Tight,
    Best,
}

impl From<MethodArg> for BoundMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Original => BoundMethod::Original,
            MethodArg::Tight => BoundMethod::Tight,
            MethodArg::Best => BoundMethod::Best,
        }
    }
}

/// Keys accepted in a config file; names mirror the channel/source fields.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub y0: Option<f64>,
    pub e0: Option<f64>,
    pub eta_bob: Option<f64>,
    pub loss_coeff: Option<f64>,
    pub e_det: Option<f64>,
    pub f_ec: Option<f64>,
    pub source: Option<SourceArg>,
    pub intensity: Option<f64>,
    pub eps0: Option<f64>,
    pub eps1: Option<f64>,
    pub method: Option<MethodArg>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// TOML key-value file (y0, e0, eta_bob, loss_coeff, e_det, f_ec, source,
    /// intensity, eps0, eps1, method).
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Built-in parameter preset applied before the config file.
    #[arg(long, value_enum, default_value = "gys")]
    pub preset: Preset,
    /// Bit-choice flaw ε0.
    #[arg(long, allow_negative_numbers = true)]
    pub eps0: Option<f64>,
    /// Basis-choice flaw ε1.
    #[arg(long, allow_negative_numbers = true)]
    pub eps1: Option<f64>,
    /// Phase-error bound.
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Dark-count probability Y0.
    #[arg(long)]
    pub y0: Option<f64>,
    /// Background error rate e0.
    #[arg(long)]
    pub e0: Option<f64>,
    /// Receiver transmittance η_Bob.
    #[arg(long)]
    pub eta_bob: Option<f64>,
    /// Fiber loss in dB/km.
    #[arg(long)]
    pub loss_coeff: Option<f64>,
    /// Misalignment error e_det.
    #[arg(long)]
    pub e_det: Option<f64>,
    /// Error-correction inefficiency f.
    #[arg(long)]
    pub f_ec: Option<f64>,
    /// Signal intensity s of the weak coherent source.
    #[arg(long)]
    pub intensity: Option<f64>,
}

/// Fully resolved inputs. Source-independent commands ignore `source`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub params: ChannelParams,
    pub source: SourceArg,
    pub intensity: f64,
    pub flaw: RandomnessFlaw,
    pub method: BoundMethod,
}

impl RunConfig {
    pub fn wps_source(&self) -> SourceSpec {
        SourceSpec::Wps {
            intensity: self.intensity,
        }
    }
}

impl ModelArgs {
    /// Layers preset → file → flags, then validates every invariant.
    pub fn resolve(&self, source_flag: Option<SourceArg>) -> anyhow::Result<RunConfig> {
        let file = match &self.config {
            Some(path) => ConfigFile::load(path)?,
            None => ConfigFile::default(),
        };
        let (mut params, mut intensity) = match self.preset {
            Preset::Gys => (ChannelParams::GYS, ChannelParams::GYS_SIGNAL_INTENSITY),
        };

        let pick = |flag: Option<f64>, file: Option<f64>, current: f64| {
            flag.or(file).unwrap_or(current)
        };
        params.dark_count = pick(self.y0, file.y0, params.dark_count);
        params.background_error = pick(self.e0, file.e0, params.background_error);
        params.eta_bob = pick(self.eta_bob, file.eta_bob, params.eta_bob);
        params.loss_db_per_km = pick(self.loss_coeff, file.loss_coeff, params.loss_db_per_km);
        params.misalignment_error = pick(self.e_det, file.e_det, params.misalignment_error);
        params.ec_efficiency = pick(self.f_ec, file.f_ec, params.ec_efficiency);
        intensity = pick(self.intensity, file.intensity, intensity);

        let eps0 = pick(self.eps0, file.eps0, 0.0);
        let eps1 = pick(self.eps1, file.eps1, 0.0);
        let method = self.method.or(file.method).unwrap_or(MethodArg::Tight);
        let source = source_flag.or(file.source).unwrap_or(SourceArg::Sps);

        params.validate()?;
        SourceSpec::Wps { intensity }.validate()?;
        let cfg = RunConfig {
            params,
            source,
            intensity,
            flaw: RandomnessFlaw::new(eps0, eps1)?,
            method: method.into(),
        };
        Ok(cfg)
    }
}
