//! The run configuration embedded in every output. Re-running an embedded
//! config reproduces the output byte for byte; the output directory is not
//! part of it.

use gainloss_core::dependence::DEFAULT_WINDOWS;
use gainloss_core::gengamma::FitWeighting;
use gainloss_core::series::ScrambleAlgorithm;
use gainloss_core::synthetic::{GbmSpec, RegimeSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_RHO: [f64; 2] = [0.05, -0.05];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    /// JSON report only.
    Json,
    /// JSON report plus plot-ready CSV tables.
    #[default]
    Csv,
}

/// Where a single price series comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesInput {
    pub paths: Vec<String>,
    /// Column to analyze when the input has several.
    pub column: Option<String>,
    /// Analyze the artificial index of all input columns instead.
    pub panel: bool,
    pub strict_dates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelInput {
    pub paths: Vec<String>,
    pub strict_dates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierConfig {
    pub rho: Vec<f64>,
    /// Longest wait kept in the histogram; `None` keeps every wait.
    pub t_max: Option<u32>,
    pub fit_weights: FitWeighting,
    /// Crossings each barrier needs before its mode enters the asymmetry.
    pub min_crossings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptConfig {
    pub input: SeriesInput,
    pub barriers: BarrierConfig,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScrambleConfig {
    pub input: SeriesInput,
    pub barriers: BarrierConfig,
    /// Replicate `r` uses seed `seed + r` (wrapping).
    pub seed: u64,
    pub replicates: usize,
    pub algorithm: ScrambleAlgorithm,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexConfig {
    pub input: PanelInput,
    pub leave_one_out: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceConfig {
    pub input: PanelInput,
    pub window_lengths: Vec<usize>,
    pub bins: usize,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum SimulateConfig {
    Gbm(GbmSpec),
    Regime(RegimeSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Fpt(FptConfig),
    Scramble(ScrambleConfig),
    Index(IndexConfig),
    Dependence(DependenceConfig),
    Simulate(SimulateConfig),
}

impl RunConfig {
    pub fn name(&self) -> &'static str {
        match self {
            RunConfig::Fpt(_) => "fpt",
            RunConfig::Scramble(_) => "scramble",
            RunConfig::Index(_) => "index",
            RunConfig::Dependence(_) => "dependence",
            RunConfig::Simulate(_) => "simulate",
        }
    }

    /// Checks everything that can be checked without reading inputs.
    pub fn validate(&self) -> CliResult<()> {
        let invalid = |m: String| Err(CliError::Invalid(m));
        let paths = |p: &[String]| {
            if p.is_empty() {
                invalid("at least one input file is required".into())
            } else {
                Ok(())
            }
        };
        let barriers = |b: &BarrierConfig| {
            if b.rho.is_empty() {
                return invalid("--rho needs at least one barrier".into());
            }
            if let Some(rho) = b.rho.iter().find(|r| **r == 0.0 || !r.is_finite()) {
                return invalid(format!(
                    "barrier levels must be nonzero and finite, got {rho}"
                ));
            }
            if b.t_max == Some(0) {
                return invalid("--t-max must be at least 1".into());
            }
            Ok(())
        };
        match self {
            RunConfig::Fpt(c) => {
                paths(&c.input.paths)?;
                barriers(&c.barriers)
            }
            RunConfig::Scramble(c) => {
                paths(&c.input.paths)?;
                barriers(&c.barriers)?;
                if c.replicates == 0 {
                    return invalid("--replicates must be at least 1".into());
                }
                Ok(())
            }
            RunConfig::Index(c) => paths(&c.input.paths),
            RunConfig::Dependence(c) => {
                paths(&c.input.paths)?;
                if c.bins < 2 {
                    return invalid(format!("--bins must be at least 2, got {}", c.bins));
                }
                if c.window_lengths.contains(&0) {
                    return invalid("window lengths must be at least 1".into());
                }
                Ok(())
            }
            RunConfig::Simulate(SimulateConfig::Gbm(spec)) => {
                if !(spec.sigma >= 0.0 && spec.sigma.is_finite() && spec.mu.is_finite()) {
                    return invalid("sigma must be finite and >= 0, mu finite".into());
                }
                if spec.days == 0 {
                    return invalid("--days must be at least 1".into());
                }
                Ok(())
            }
            RunConfig::Simulate(SimulateConfig::Regime(spec)) => {
                spec.validate().map_err(CliError::from)
            }
        }
    }
}

/// Parses `5,10,20`, `5:100:5` (inclusive range with step) or any
/// comma-separated mix. An empty string is an empty list.
pub fn parse_windows(s: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let nums: Vec<&str> = part.split(':').collect();
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("'{t}' is not a non-negative integer"))
        };
        match nums.as_slice() {
            [one] => out.push(num(one)?),
            [start, stop, step] => {
                let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
                if step == 0 {
                    return Err(format!("zero step in '{part}'"));
                }
                out.extend((start..=stop).step_by(step));
            }
            _ => return Err(format!("'{part}' is neither a number nor start:stop:step")),
        }
    }
    Ok(out)
}

pub fn default_windows() -> Vec<usize> {
    DEFAULT_WINDOWS.to_vec()
}
