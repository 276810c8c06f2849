//! Flat key = value run configuration with flag overrides.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use overnight_core::FactorSet;

use crate::CliError;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub sectors_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub start_date: Option<NaiveDate>,
    pub end_date: Option<NaiveDate>,
    pub top_n: usize,
    pub rank_lo: Option<usize>,
    pub rank_hi: Option<usize>,
    /// Trailing window for the volatility/volume loadings.
    pub window: usize,
    pub rebalance_period: usize,
    pub addv_window: usize,
    /// One entry per model to run.
    pub factor_specs: Vec<FactorSet>,
    /// Gross (long plus short) investment level in dollars.
    pub investment: f64,
    pub normalize_residuals: bool,
    pub write_residuals: bool,
    pub seed: u64,
    pub n_tickers: usize,
    pub n_dates: usize,
    pub n_sectors: u32,
    pub planted: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            sectors_path: None,
            output_dir: PathBuf::from("out"),
            start_date: None,
            end_date: None,
            top_n: 2000,
            rank_lo: None,
            rank_hi: None,
            window: 21,
            rebalance_period: 21,
            addv_window: 21,
            factor_specs: Vec::new(),
            investment: 2e7, // $10M long plus $10M short
            normalize_residuals: true,
            write_residuals: false,
            seed: 42,
            n_tickers: 100,
            n_dates: 300,
            n_sectors: 10,
            planted: false,
        }
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(CliError::Usage(format!(
            "config key `{key}` expects true or false, got `{other}`"
        ))),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Usage(format!("config key `{key}` has bad value `{value}`")))
}

fn parse_date(key: &str, value: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d").map_err(|_| {
        CliError::Usage(format!(
            "config key `{key}` expects YYYY-MM-DD, got `{value}`"
        ))
    })
}

impl RunConfig {
    /// Parses a flat configuration file: one `key = value` per line,
    /// `#` comments, `factors` repeatable (one model per occurrence).
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut config = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected `key = value`",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            match key {
                "data" => config.data = Some(PathBuf::from(value)),
                "sectors" => config.sectors_path = Some(PathBuf::from(value)),
                "output_dir" => config.output_dir = PathBuf::from(value),
                "start_date" => config.start_date = Some(parse_date(key, value)?),
                "end_date" => config.end_date = Some(parse_date(key, value)?),
                "top_n" => config.top_n = parse_num(key, value)?,
                "rank_lo" => config.rank_lo = Some(parse_num(key, value)?),
                "rank_hi" => config.rank_hi = Some(parse_num(key, value)?),
                "window" => config.window = parse_num(key, value)?,
                "rebalance_period" => config.rebalance_period = parse_num(key, value)?,
                "addv_window" => config.addv_window = parse_num(key, value)?,
                "factors" => config
                    .factor_specs
                    .push(FactorSet::parse(value).map_err(|e| CliError::Usage(e.to_string()))?),
                "investment" => config.investment = parse_num(key, value)?,
                "normalize_residuals" => config.normalize_residuals = parse_bool(key, value)?,
                "write_residuals" => config.write_residuals = parse_bool(key, value)?,
                "seed" => config.seed = parse_num(key, value)?,
                "tickers" => config.n_tickers = parse_num(key, value)?,
                "dates" => config.n_dates = parse_num(key, value)?,
                "n_sectors" => config.n_sectors = parse_num(key, value)?,
                "planted" => config.planted = parse_bool(key, value)?,
                other => {
                    return Err(CliError::Usage(format!(
                        "{}:{}: unknown config key `{other}`",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.window == 0 || self.rebalance_period == 0 || self.addv_window == 0 {
            return Err(CliError::Usage(
                "window, rebalance_period and addv_window must be at least 1".into(),
            ));
        }
        if self.top_n == 0 {
            return Err(CliError::Usage("top_n must be at least 1".into()));
        }
        if !(self.investment.is_finite() && self.investment > 0.0) {
            return Err(CliError::Usage("investment must be positive".into()));
        }
        match (self.rank_lo, self.rank_hi) {
            (None, None) => {}
            (Some(lo), Some(hi)) if lo >= 1 && lo <= hi => {}
            _ => {
                return Err(CliError::Usage(
                    "rank_lo and rank_hi must be given together with 1 <= rank_lo <= rank_hi"
                        .into(),
                ))
            }
        }
        if let (Some(start), Some(end)) = (self.start_date, self.end_date) {
            if start > end {
                return Err(CliError::Usage("start_date is after end_date".into()));
            }
        }
        Ok(())
    }

    /// Effective settings, echoed into the run log for provenance.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        if let Some(p) = &self.data {
            push("data", p.display().to_string());
        }
        if let Some(p) = &self.sectors_path {
            push("sectors", p.display().to_string());
        }
        push("output_dir", self.output_dir.display().to_string());
        if let Some(d) = self.start_date {
            push("start_date", d.to_string());
        }
        if let Some(d) = self.end_date {
            push("end_date", d.to_string());
        }
        push("top_n", self.top_n.to_string());
        if let (Some(lo), Some(hi)) = (self.rank_lo, self.rank_hi) {
            push("rank_lo", lo.to_string());
            push("rank_hi", hi.to_string());
        }
        push("window", self.window.to_string());
        push("rebalance_period", self.rebalance_period.to_string());
        push("addv_window", self.addv_window.to_string());
        for spec in &self.factor_specs {
            push(
                "factors",
                spec.factors()
                    .iter()
                    .map(|f| f.as_str())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        push("investment", format!("{}", self.investment));
        push("normalize_residuals", self.normalize_residuals.to_string());
        push("write_residuals", self.write_residuals.to_string());
        push("seed", self.seed.to_string());
        out
    }
}
