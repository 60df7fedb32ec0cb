use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gainloss_core::fpt::DEFAULT_MIN_CROSSINGS;
use gainloss_core::gengamma::FitWeighting;
use gainloss_core::series::ScrambleAlgorithm;
use gainloss_core::synthetic::{GbmSpec, RegimeSpec};

use crate::config::{
    parse_windows, BarrierConfig, DependenceConfig, Format, FptConfig, IndexConfig, PanelInput,
    RunConfig, ScrambleConfig, SeriesInput, SimulateConfig,
};

/// Inverse statistics of price series: first-passage-time distributions,
/// gain/loss asymmetry, scrambled surrogates, equal-weight indices and
/// up/down dependence between constituents.
#[derive(Debug, Parser)]
#[command(name = "gainloss", version)]
pub struct Cli {
    /// Directory for reports and tables (created if missing).
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// First-passage-time distributions, fits and asymmetry of one series.
    Fpt(FptArgs),
    /// The fpt pipeline on scrambled copies of a series.
    Scramble(ScrambleArgs),
    /// Equal-weight artificial index of a panel.
    Index(IndexArgs),
    /// Mean mutual information and correlation on up and down days.
    Dependence(DependenceArgs),
    /// Write synthetic data in the input CSV dialect.
    #[command(subcommand)]
    Simulate(SimulateArgs),
    /// Re-run the configuration embedded in a JSON report.
    Rerun {
        /// A report written by an earlier run.
        report: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SeriesArgs {
    /// Input CSV file(s).
    #[arg(required = true)]
    pub inputs: Vec<String>,
    /// Column to analyze when an input has several.
    #[arg(long)]
    pub column: Option<String>,
    /// Analyze the artificial index of every input column.
    #[arg(long)]
    pub panel: bool,
    /// Reject inputs whose dates differ instead of intersecting them.
    #[arg(long)]
    pub strict_dates: bool,
}

impl SeriesArgs {
    fn config(self) -> SeriesInput {
        SeriesInput {
            paths: self.inputs,
            column: self.column,
            panel: self.panel,
            strict_dates: self.strict_dates,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Weights {
    Uniform,
    Mass,
}

#[derive(Debug, Args)]
pub struct BarrierArgs {
    /// Barrier log returns, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "0.05,-0.05"
    )]
    pub rho: Vec<f64>,
    /// Longest wait kept in the histogram (default: longest observed).
    #[arg(long)]
    pub t_max: Option<u32>,
    /// Residual weights of the generalized gamma fit.
    #[arg(long, value_enum, default_value = "uniform")]
    pub fit_weights: Weights,
    /// Crossings each barrier needs before the asymmetry is reported.
    #[arg(long, default_value_t = DEFAULT_MIN_CROSSINGS)]
    pub min_crossings: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

impl BarrierArgs {
    fn config(&self) -> BarrierConfig {
        BarrierConfig {
            rho: self.rho.clone(),
            t_max: self.t_max,
            fit_weights: match self.fit_weights {
                Weights::Uniform => FitWeighting::Uniform,
                Weights::Mass => FitWeighting::Mass,
            },
            min_crossings: self.min_crossings,
        }
    }
}

#[derive(Debug, Args)]
pub struct FptArgs {
    #[command(flatten)]
    pub input: SeriesArgs,
    #[command(flatten)]
    pub barriers: BarrierArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Algorithm {
    Chacha8FisherYates,
    Identity,
}

#[derive(Debug, Args)]
pub struct ScrambleArgs {
    #[command(flatten)]
    pub input: SeriesArgs,
    #[command(flatten)]
    pub barriers: BarrierArgs,
    /// Seed of the first replicate; replicate r uses seed + r.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of scrambled copies whose histograms are averaged.
    #[arg(long, default_value_t = 1)]
    pub replicates: usize,
    #[arg(long, value_enum, default_value = "chacha8-fisher-yates")]
    pub scramble_algorithm: Algorithm,
}

#[derive(Debug, Args)]
pub struct PanelArgs {
    /// Input CSV file(s); all columns together form the panel.
    #[arg(required = true)]
    pub inputs: Vec<String>,
    /// Reject inputs whose dates differ instead of intersecting them.
    #[arg(long)]
    pub strict_dates: bool,
}

impl PanelArgs {
    fn config(self) -> PanelInput {
        PanelInput {
            paths: self.inputs,
            strict_dates: self.strict_dates,
        }
    }
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[command(flatten)]
    pub input: PanelArgs,
    /// Also write the index without each stock.
    #[arg(long)]
    pub leave_one_out: bool,
}

#[derive(Debug, Args)]
pub struct DependenceArgs {
    #[command(flatten)]
    pub input: PanelArgs,
    /// Window lengths: a comma list and/or start:stop:step ranges; "" for none.
    #[arg(long, default_value = "5:100:5", value_parser = parse_windows)]
    pub window_lengths: std::vec::Vec<usize>,
    /// Quantile bins per margin for mutual information.
    #[arg(long, default_value_t = 8)]
    pub bins: usize,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum SimulateArgs {
    /// One geometric Brownian motion path starting at 1.
    Gbm {
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        mu: f64,
        #[arg(long, default_value_t = 0.01)]
        sigma: f64,
        #[arg(long, default_value_t = 100_000)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// A panel whose stocks couple more strongly in down regimes.
    Regime(RegimeArgs),
}

#[derive(Debug, Args)]
pub struct RegimeArgs {
    #[arg(long, default_value_t = RegimeSpec::default().stocks)]
    pub stocks: usize,
    #[arg(long, default_value_t = RegimeSpec::default().days)]
    pub days: usize,
    /// Chance that a new regime is a downturn.
    #[arg(long, default_value_t = RegimeSpec::default().p_down)]
    pub p_down: f64,
    #[arg(long, default_value_t = RegimeSpec::default().regime_mean_length)]
    pub regime_mean_length: f64,
    #[arg(long, default_value_t = RegimeSpec::default().rho_up)]
    pub rho_up: f64,
    #[arg(long, default_value_t = RegimeSpec::default().rho_down)]
    pub rho_down: f64,
    #[arg(long, default_value_t = RegimeSpec::default().drift_up, allow_negative_numbers = true)]
    pub drift_up: f64,
    #[arg(long, default_value_t = RegimeSpec::default().drift_down, allow_negative_numbers = true)]
    pub drift_down: f64,
    #[arg(long, default_value_t = RegimeSpec::default().sigma)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// What `main` should do after parsing.
pub enum Action {
    Run(RunConfig),
    Rerun(PathBuf),
}

impl Command {
    pub fn into_action(self) -> Action {
        let config = match self {
            Command::Rerun { report } => return Action::Rerun(report),
            Command::Fpt(a) => RunConfig::Fpt(FptConfig {
                barriers: a.barriers.config(),
                format: a.barriers.format,
                input: a.input.config(),
            }),
            Command::Scramble(a) => RunConfig::Scramble(ScrambleConfig {
                barriers: a.barriers.config(),
                format: a.barriers.format,
                input: a.input.config(),
                seed: a.seed,
                replicates: a.replicates,
                algorithm: match a.scramble_algorithm {
                    Algorithm::Chacha8FisherYates => ScrambleAlgorithm::Chacha8FisherYates,
                    Algorithm::Identity => ScrambleAlgorithm::Identity,
                },
            }),
            Command::Index(a) => RunConfig::Index(IndexConfig {
                input: a.input.config(),
                leave_one_out: a.leave_one_out,
            }),
            Command::Dependence(a) => RunConfig::Dependence(DependenceConfig {
                input: a.input.config(),
                window_lengths: a.window_lengths,
                bins: a.bins,
                format: a.format,
            }),
            Command::Simulate(SimulateArgs::Gbm {
                mu,
                sigma,
                days,
                seed,
            }) => RunConfig::Simulate(SimulateConfig::Gbm(GbmSpec {
                mu,
                sigma,
                days,
                seed,
            })),
            Command::Simulate(SimulateArgs::Regime(r)) => {
                RunConfig::Simulate(SimulateConfig::Regime(RegimeSpec {
                    stocks: r.stocks,
                    days: r.days,
                    p_down: r.p_down,
                    regime_mean_length: r.regime_mean_length,
                    rho_up: r.rho_up,
                    rho_down: r.rho_down,
                    drift_up: r.drift_up,
                    drift_down: r.drift_down,
                    sigma: r.sigma,
                    seed: r.seed,
                }))
            }
        };
        Action::Run(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(args: &[&str]) -> RunConfig {
        let cli = Cli::try_parse_from(args).unwrap();
        match cli.command.into_action() {
            Action::Run(c) => c,
            Action::Rerun(_) => panic!("expected a run"),
        }
    }

    #[test]
    fn defaults() {
        let RunConfig::Fpt(c) = config(&["gainloss", "fpt", "a.csv"]) else {
            panic!()
        };
        assert_eq!(c.barriers.rho, [0.05, -0.05]);
        assert_eq!(c.barriers.fit_weights, FitWeighting::Uniform);
        assert_eq!(c.format, Format::Csv);

        let RunConfig::Dependence(c) = config(&["gainloss", "dependence", "p.csv"]) else {
            panic!()
        };
        assert_eq!(c.window_lengths, crate::config::default_windows());
        assert_eq!(c.bins, 8);

        let RunConfig::Simulate(SimulateConfig::Regime(spec)) =
            config(&["gainloss", "simulate", "regime"])
        else {
            panic!()
        };
        assert_eq!(spec, RegimeSpec::default());
    }

    #[test]
    fn flags() {
        let RunConfig::Scramble(c) = config(&[
            "gainloss",
            "scramble",
            "a.csv",
            "--rho",
            "-0.02,0.02",
            "--seed",
            "9",
            "--replicates",
            "4",
            "--scramble-algorithm",
            "identity",
            "--format",
            "json",
        ]) else {
            panic!()
        };
        assert_eq!(c.barriers.rho, [-0.02, 0.02]);
        assert_eq!((c.seed, c.replicates), (9, 4));
        assert_eq!(c.algorithm, ScrambleAlgorithm::Identity);
        assert_eq!(c.format, Format::Json);

        let RunConfig::Dependence(c) =
            config(&["gainloss", "dependence", "p.csv", "--window-lengths", ""])
        else {
            panic!()
        };
        assert!(c.window_lengths.is_empty());
    }
}
