//! Per-date cross-sectional regressions of overnight returns on factor
//! loadings, and the serial statistics of the resulting factor-return
//! time series.
//!
//! Each date is an independent unweighted least-squares problem
//! `R ~ B f + eps`. The F-statistic uses the uncentered null-of-all-zero
//! form `(sum_i (Bf)_i^2 / k) / (sum_i eps_i^2 / (n - k))`, which stays
//! defined for an intercept-only regression.

use chrono::NaiveDate;
use ndarray::Array1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::factors::{self, assemble_loadings, FactorSet, LoadingsMatrix, SectorMap};
use crate::linalg;
use crate::market_data::{PricePanel, ReturnPanel};
use crate::universe::UniverseSchedule;

pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

/// One date's regression output.
#[derive(Debug, Clone)]
pub struct RegressionDay {
    pub date: NaiveDate,
    pub factor_names: Vec<String>,
    pub factor_returns: Vec<f64>,
    /// Panel ticker indices of the cross-section, aligned with `residuals`.
    pub tickers: Vec<usize>,
    pub residuals: Vec<f64>,
    /// Infinite when the fit is exact (zero residual sum of squares).
    pub f_stat: f64,
    pub n: usize,
    pub k: usize,
}

impl RegressionDay {
    pub fn factor_return(&self, name: &str) -> Option<f64> {
        self.factor_names
            .iter()
            .position(|f| f == name)
            .map(|i| self.factor_returns[i])
    }
}

/// Serial (time-series) statistics over a run of regression days.
#[derive(Debug, Clone)]
pub struct SerialStats {
    pub factor_names: Vec<String>,
    /// Annualized t-statistic per factor; `None` when the factor-return
    /// series has zero standard deviation.
    pub t_stats: Vec<Option<f64>>,
    pub median_f_stat: f64,
    pub dates_used: usize,
}

impl SerialStats {
    pub fn t_stat(&self, name: &str) -> Option<Option<f64>> {
        self.factor_names
            .iter()
            .position(|f| f == name)
            .map(|i| self.t_stats[i])
    }
}

/// A backtest date that produced no regression, with the reason.
#[derive(Debug, Clone)]
pub struct SkippedDate {
    pub date: NaiveDate,
    pub reason: String,
}

/// Unweighted OLS of one date's returns on its loadings.
pub fn regress_day(returns: &[f64], loadings: &LoadingsMatrix) -> Result<RegressionDay> {
    let (n, k) = loadings.values.dim();
    if returns.len() != n {
        return Err(Error::InvalidParam(format!(
            "returns length {} does not match {} loading rows",
            returns.len(),
            n
        )));
    }
    if n <= k {
        return Err(Error::TooFewRows { n, k });
    }
    let b = Array1::from_vec(returns.to_vec());
    let sol = linalg::lstsq(&loadings.values, &b.view())?;
    let fitted = loadings.values.dot(&sol.coefficients);
    let residuals: Vec<f64> = returns
        .iter()
        .zip(fitted.iter())
        .map(|(r, f)| r - f)
        .collect();

    let ssm: f64 = fitted.iter().map(|v| v * v).sum();
    let sse: f64 = residuals.iter().map(|v| v * v).sum();
    // An exact fit leaves only rounding noise in the residuals, on the
    // order of n * eps^2 * ||R||^2; flag it as infinite rather than
    // reporting a meaningless astronomical ratio.
    let perfect = sse <= 16.0 * n as f64 * f64::EPSILON * f64::EPSILON * ssm;
    let f_stat = if perfect {
        f64::INFINITY
    } else {
        (ssm / k as f64) / (sse / (n - k) as f64)
    };

    Ok(RegressionDay {
        date: loadings.date,
        factor_names: loadings.columns.clone(),
        factor_returns: sol.coefficients.to_vec(),
        tickers: loadings.tickers.clone(),
        residuals,
        f_stat,
        n,
        k,
    })
}

enum DayOutcome {
    Day(Box<RegressionDay>),
    Skip(SkippedDate),
}

/// Runs the per-date regressions over every backtest date in the schedule.
/// A date's cross-section is the interval universe restricted to tickers
/// with a defined overnight return and all loading inputs; dates that
/// cannot produce a regression are skipped with a logged reason, and the
/// run fails only if no date is usable.
pub fn run_backtest_regressions(
    panel: &PricePanel,
    returns: &ReturnPanel,
    schedule: &UniverseSchedule,
    set: &FactorSet,
    sector_map: Option<&SectorMap>,
    d: usize,
) -> Result<(Vec<RegressionDay>, Vec<SkippedDate>)> {
    let work: Vec<(usize, &[usize])> = schedule
        .intervals
        .iter()
        .flat_map(|iv| iv.date_indices().map(move |s| (s, iv.tickers.as_slice())))
        .collect();

    let outcomes: Vec<DayOutcome> = work
        .par_iter()
        .map(|&(s, universe)| {
            let date = panel.date(s);
            let candidates: Vec<usize> = universe
                .iter()
                .copied()
                .filter(|&i| returns.get(i, s).is_some())
                .collect();
            if candidates.is_empty() {
                return DayOutcome::Skip(SkippedDate {
                    date,
                    reason: "no overnight returns in cross-section".into(),
                });
            }
            let loadings = match assemble_loadings(panel, s, set, sector_map, d, &candidates) {
                Ok(l) => l,
                Err(e) => {
                    return DayOutcome::Skip(SkippedDate {
                        date,
                        reason: e.to_string(),
                    })
                }
            };
            let r: Vec<f64> = loadings
                .tickers
                .iter()
                .map(|&i| returns.get(i, s).expect("candidate has a return"))
                .collect();
            match regress_day(&r, &loadings) {
                Ok(day) => DayOutcome::Day(Box::new(day)),
                Err(e) => DayOutcome::Skip(SkippedDate {
                    date,
                    reason: e.to_string(),
                }),
            }
        })
        .collect();

    let mut days = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            DayOutcome::Day(day) => days.push(*day),
            DayOutcome::Skip(skip) => skipped.push(skip),
        }
    }
    if days.is_empty() {
        return Err(Error::NoUsableDates);
    }
    Ok((days, skipped))
}

/// Serial t-statistics of the factor-return series, annualized by
/// sqrt(252), plus the median daily F-statistic. All days must share the
/// same factor set.
pub fn fama_macbeth(days: &[RegressionDay]) -> Result<SerialStats> {
    if days.len() < 2 {
        return Err(Error::NotEnoughDays(days.len()));
    }
    let names = &days[0].factor_names;
    if days.iter().any(|d| &d.factor_names != names) {
        return Err(Error::FactorSetMismatch);
    }

    let mut t_stats = Vec::with_capacity(names.len());
    for a in 0..names.len() {
        let series: Vec<f64> = days.iter().map(|d| d.factor_returns[a]).collect();
        let mean = factors::sample_mean(&series);
        let sd = factors::sample_sd(&series);
        t_stats.push(if sd > 0.0 {
            Some(TRADING_DAYS_PER_YEAR.sqrt() * mean / sd)
        } else {
            None
        });
    }

    let mut f_stats: Vec<f64> = days.iter().map(|d| d.f_stat).collect();
    f_stats.sort_by(f64::total_cmp);
    let m = f_stats.len();
    let median_f_stat = if m % 2 == 1 {
        f_stats[m / 2]
    } else {
        0.5 * (f_stats[m / 2 - 1] + f_stats[m / 2])
    };

    Ok(SerialStats {
        factor_names: names.clone(),
        t_stats,
        median_f_stat,
        dates_used: days.len(),
    })
}
