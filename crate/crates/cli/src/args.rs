use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use realrate::rates::DEFAULT_WINDOW_YEARS;

#[derive(Debug, Parser)]
#[command(
    name = "realrate",
    version,
    about = "Real interest rates, Ornstein-Uhlenbeck calibration and long-run discounting"
)]
pub struct Cli {
    /// Worker threads for parallel work (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the real-rate series from yields and inflation.
    Rates {
        #[command(flatten)]
        input: SeriesInput,
        #[command(flatten)]
        out: Output,
    },
    /// Share of time the real rate spent below zero.
    Negstats {
        #[command(flatten)]
        input: SeriesInput,
        #[command(flatten)]
        out: Output,
    },
    /// Maximum-likelihood fit of a rate model.
    Fit {
        #[command(flatten)]
        input: SeriesInput,
        #[arg(long, value_enum, default_value_t = FitModel::Ou)]
        model: FitModel,
        #[command(flatten)]
        out: Output,
    },
    /// Discount-rate curve −ln D(t)/t, optionally with its error envelope.
    Discount {
        #[command(flatten)]
        model: OuSource,
        /// Initial rate as a decimal fraction.
        #[arg(long, default_value_t = realrate::ou::DEFAULT_R0, allow_hyphen_values = true)]
        r0: f64,
        /// `geometric:<start>:<stop>:<n>` or `linear:<start>:<stop>:<n>`.
        #[arg(long, default_value = "geometric:0.25:500:200")]
        grid: String,
        /// Add the min/max over the 27 one-sigma parameter corners.
        #[arg(long)]
        envelope: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Dimensionless parameters, negative-rate probability and regime.
    Classify {
        #[command(flatten)]
        model: OuSource,
        #[command(flatten)]
        out: Output,
    },
    /// Shifted square-root model: fit and long-run rate.
    Feller {
        #[command(flatten)]
        input: SeriesInput,
        #[command(flatten)]
        out: Output,
    },
    /// Shifted lognormal model: fit, regime and long-run rate.
    Lognormal {
        #[command(flatten)]
        input: SeriesInput,
        #[command(flatten)]
        out: Output,
    },
    /// Extended-OU long-run rate as a function of the slow reversion α₀.
    ExtouSweep {
        #[command(flatten)]
        model: OuSource,
        /// Historical variance of the real rate.
        #[arg(long)]
        variance: f64,
        /// Grid of α₀/α ratios, same syntax as `discount --grid`.
        #[arg(long, default_value = "linear:0.005:0.5:100")]
        ratios: String,
        #[arg(long, value_enum, default_value_t = Convention::Published)]
        convention: Convention,
        #[command(flatten)]
        out: Output,
    },
    /// Monte Carlo paths of a rate model.
    Simulate {
        #[arg(long, value_enum, default_value_t = SimModel::Ou)]
        model: SimModel,
        /// OU fit JSON (OU model only).
        #[arg(long, conflicts_with = "params")]
        fit: Option<PathBuf>,
        /// Comma-separated parameters: ou and feller and lognormal take
        /// `m,alpha,k2` (lognormal ignores alpha); ext-ou takes
        /// `m0,alpha,k2,alpha0,k02`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        params: Option<Vec<f64>>,
        /// Initial rate.
        #[arg(long, default_value_t = realrate::ou::DEFAULT_R0, allow_hyphen_values = true)]
        r0: f64,
        /// Shift for the positive models, which simulate y = r − r_min.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        r_min: f64,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        /// Years.
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        /// Recording interval in years.
        #[arg(long, default_value_t = 1.0)]
        every: f64,
        /// Write the discount estimate `t,discount,stderr` instead of the
        /// per-path integrals.
        #[arg(long)]
        discount: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Closed forms against simulation, as a pass/fail table.
    Verify {
        #[command(flatten)]
        model: OuSource,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 0.01)]
        dt: f64,
        #[arg(long, default_value_t = realrate::ou::DEFAULT_R0, allow_hyphen_values = true)]
        r0: f64,
        /// Allowed deviation in Monte Carlo standard errors.
        #[arg(long, default_value_t = 3.0)]
        sigmas: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Full pipeline over a manifest of countries.
    Report {
        /// JSON array (or JSON lines) of {label, yields_path, cpi_path}.
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory, or `-` to stream the whole report as JSON.
        #[arg(long)]
        out: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Both)]
        format: Format,
        /// Also print rounded tables to standard error.
        #[arg(long)]
        pretty: bool,
        #[arg(long, default_value = "geometric:0.25:500:200")]
        grid: String,
        #[arg(long, default_value_t = realrate::ou::DEFAULT_R0, allow_hyphen_values = true)]
        r0: f64,
        #[arg(long)]
        no_envelope: bool,
        /// Skip the shifted square-root and lognormal fits.
        #[arg(long)]
        no_alt_models: bool,
        /// Propagate errors with the full parameter covariance.
        #[arg(long)]
        full_covariance: bool,
        #[arg(long, default_value_t = DEFAULT_WINDOW_YEARS)]
        window: u32,
    },
}

/// Either a ready real-rate series or the raw yield and inflation inputs.
#[derive(Debug, Args)]
pub struct SeriesInput {
    /// Real-rate series as `date,value` CSV.
    #[arg(long, conflicts_with_all = ["yields", "cpi"])]
    pub input: Option<PathBuf>,
    /// Annual nominal bond yields as `date,value` CSV.
    #[arg(long, requires = "cpi")]
    pub yields: Option<PathBuf>,
    /// Annualized CPI change rates as `date,value` CSV.
    #[arg(long, requires = "yields")]
    pub cpi: Option<PathBuf>,
    /// Read --cpi as index levels instead of change rates.
    #[arg(long)]
    pub cpi_levels: bool,
    /// Forward inflation window in years.
    #[arg(long, default_value_t = DEFAULT_WINDOW_YEARS)]
    pub window: u32,
}

/// OU parameters from a fit file or given directly.
#[derive(Debug, Args)]
pub struct OuSource {
    /// OU fit JSON written by `fit --model ou`.
    #[arg(long, conflicts_with = "params")]
    pub fit: Option<PathBuf>,
    /// `m,alpha,k2`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file, or `-` for standard output.
    #[arg(long)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    Ou,
    Feller,
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimModel {
    Ou,
    ExtOu,
    Feller,
    Lognormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convention {
    Published,
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}
