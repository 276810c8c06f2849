//! `overnight` — batch pipeline around the overnight-returns factor
//! model: ingest daily bars, run per-date cross-sectional regressions
//! with serial statistics, simulate the intraday mean-reversion alpha,
//! and generate synthetic panels.
//!
//! Exit codes: 0 success, 1 usage/configuration, 2 data error,
//! 3 numerical error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use overnight_core::ErrorCategory;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io {
        path: String,
        source: std::io::Error,
    },
    Core(overnight_core::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Io { path, source } => write!(f, "failed to write {path}: {source}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<overnight_core::Error> for CliError {
    fn from(e: overnight_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Config => 1,
                ErrorCategory::Data => 2,
                ErrorCategory::Numerical => 3,
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "overnight",
    version,
    about = "Overnight-returns factor model: regressions, statistics, and the intraday \
             mean-reversion backtest"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run per-date cross-sectional regressions and serial statistics
    Stats(RunArgs),
    /// Simulate the intraday dollar-neutral mean-reversion alpha
    Sim(RunArgs),
    /// Generate a synthetic daily-bar panel (optionally with planted factors)
    Synth(SynthArgs),
    /// Dump the ADDV universe schedule
    Universe(RunArgs),
}

/// Flags override the corresponding configuration keys.
#[derive(Args)]
struct RunArgs {
    /// Flat key = value configuration file
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Daily bar CSV (date,ticker,open,high,low,close,adj_close,volume)
    #[arg(long, value_name = "PATH")]
    data: Option<PathBuf>,
    /// Sector CSV (ticker,sector)
    #[arg(long, value_name = "PATH")]
    sectors: Option<PathBuf>,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Factor spec, e.g. int,prc,mom,hlv,vol (repeat for several models;
    /// replaces the config's list)
    #[arg(long, value_name = "SPEC")]
    factors: Vec<String>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    rank_lo: Option<usize>,
    #[arg(long)]
    rank_hi: Option<usize>,
    /// Trailing window (days) for volatility/volume loadings
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    rebalance_period: Option<usize>,
    #[arg(long)]
    addv_window: Option<usize>,
    /// Gross investment level in dollars
    #[arg(long)]
    investment: Option<f64>,
    #[arg(long, value_name = "BOOL")]
    normalize_residuals: Option<bool>,
    #[arg(long, value_name = "BOOL")]
    write_residuals: Option<bool>,
    /// Backtest start date (YYYY-MM-DD)
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Backtest end date (YYYY-MM-DD)
    #[arg(long)]
    end: Option<NaiveDate>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Optional configuration file for defaults
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Number of tickers
    #[arg(long)]
    tickers: Option<usize>,
    /// Number of trading dates
    #[arg(long)]
    dates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Plant a known factor structure and write its truth sidecar
    #[arg(long)]
    planted: bool,
    /// Number of sectors in the generated sector file
    #[arg(long)]
    n_sectors: Option<u32>,
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::from_file(&self.config)?;
        if let Some(v) = self.data {
            config.data = Some(v);
        }
        if let Some(v) = self.sectors {
            config.sectors_path = Some(v);
        }
        if let Some(v) = self.out {
            config.output_dir = v;
        }
        if !self.factors.is_empty() {
            config.factor_specs = self
                .factors
                .iter()
                .map(|s| overnight_core::FactorSet::parse(s))
                .collect::<overnight_core::Result<_>>()
                .map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if let Some(v) = self.top_n {
            config.top_n = v;
        }
        if let Some(v) = self.rank_lo {
            config.rank_lo = Some(v);
        }
        if let Some(v) = self.rank_hi {
            config.rank_hi = Some(v);
        }
        if let Some(v) = self.window {
            config.window = v;
        }
        if let Some(v) = self.rebalance_period {
            config.rebalance_period = v;
        }
        if let Some(v) = self.addv_window {
            config.addv_window = v;
        }
        if let Some(v) = self.investment {
            config.investment = v;
        }
        if let Some(v) = self.normalize_residuals {
            config.normalize_residuals = v;
        }
        if let Some(v) = self.write_residuals {
            config.write_residuals = v;
        }
        if let Some(v) = self.start {
            config.start_date = Some(v);
        }
        if let Some(v) = self.end {
            config.end_date = Some(v);
        }
        Ok(config)
    }
}

impl SynthArgs {
    fn into_config(self) -> Result<RunConfig, CliError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        config.output_dir = self.out;
        if let Some(v) = self.tickers {
            config.n_tickers = v;
        }
        if let Some(v) = self.dates {
            config.n_dates = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if self.planted {
            config.planted = true;
        }
        if let Some(v) = self.n_sectors {
            config.n_sectors = v;
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Stats(args) => commands::cmd_stats(&args.into_config()?),
        Command::Sim(args) => commands::cmd_sim(&args.into_config()?),
        Command::Synth(args) => commands::cmd_synth(&args.into_config()?),
        Command::Universe(args) => commands::cmd_universe(&args.into_config()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's own help/version output exits cleanly
            if e.use_stderr() {
                let _ = e.print();
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}
