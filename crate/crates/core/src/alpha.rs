//! Intraday dollar-neutral mean-reversion alpha on regression residuals.
//!
//! Positions are established at the open and liquidated at the close of
//! the same day with no transaction costs or slippage: holdings
//! `H_i = -eps_i * I / sum|eps|` trade against each stock's residual
//! overnight move, per-stock P&L is `H_i * (close/open - 1)` in same-day
//! unadjusted prices, and shares traded count both the buy and the sell,
//! `Q_i = 2|H_i| / open_i`.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::factors::{self, FactorSet, SectorMap};
use crate::market_data::{PricePanel, ReturnPanel};
use crate::universe::UniverseSchedule;
use crate::xsreg::{self, SkippedDate, TRADING_DAYS_PER_YEAR};

/// One day's desired dollar holdings over the cross-section.
#[derive(Debug, Clone)]
pub struct HoldingsDay {
    pub date: NaiveDate,
    /// Panel ticker indices, aligned with `dollars`.
    pub tickers: Vec<usize>,
    pub dollars: Vec<f64>,
    /// Gross investment level: sum of absolute holdings.
    pub investment: f64,
}

impl HoldingsDay {
    pub fn gross(&self) -> f64 {
        self.dollars.iter().map(|h| h.abs()).sum()
    }

    pub fn net(&self) -> f64 {
        self.dollars.iter().sum()
    }
}

/// Simulation result for one model: daily P&L, holdings, and the
/// ROC / Sharpe / cents-per-share summary.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub model: String,
    /// Chronological, one entry per usable date.
    pub dates: Vec<NaiveDate>,
    pub daily_pnl: Vec<f64>,
    pub holdings: Vec<HoldingsDay>,
    /// Annualized return on capital: 252 * mean(daily pnl) / investment.
    pub roc: f64,
    /// Annualized Sharpe ratio; `None` when the P&L series has zero
    /// standard deviation.
    pub sharpe: Option<f64>,
    /// Cents per share: 100 * total pnl / total shares traded.
    pub cps: f64,
    pub shares_traded: f64,
    pub investment: f64,
}

impl SimReport {
    pub fn total_pnl(&self) -> f64 {
        self.daily_pnl.iter().sum()
    }

    pub fn cumulative_pnl(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.daily_pnl
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }
}

/// Builds the dollar holdings from one date's residuals. With
/// `normalize`, the residuals are first conformed to a normal shape with
/// the same mean and standard deviation as the raw residuals for that
/// date; holdings then take the opposite sign of the (normalized)
/// residual, scaled so gross exposure equals `investment`.
pub fn compute_holdings(
    date: NaiveDate,
    tickers: &[usize],
    residuals: &[f64],
    investment: f64,
    normalize: bool,
) -> Result<HoldingsDay> {
    if tickers.len() != residuals.len() {
        return Err(Error::InvalidParam(
            "tickers and residuals must align".into(),
        ));
    }
    if !(investment.is_finite() && investment > 0.0) {
        return Err(Error::InvalidParam("investment must be positive".into()));
    }
    let eps: Vec<f64> = if normalize {
        let mean = factors::sample_mean(residuals);
        factors::normalize_gaussian(residuals, mean)?
    } else {
        residuals.to_vec()
    };
    let sum_abs: f64 = eps.iter().map(|e| e.abs()).sum();
    if sum_abs == 0.0 {
        return Err(Error::DegenerateResiduals);
    }
    let scale = investment / sum_abs;
    let dollars: Vec<f64> = eps.iter().map(|e| -e * scale).collect();
    Ok(HoldingsDay {
        date,
        tickers: tickers.to_vec(),
        dollars,
        investment,
    })
}

/// Runs the full mean-reversion simulation for one factor set: per-date
/// regression, holdings, open-to-close P&L, and summary metrics. The
/// universe rebalancing generates no extra trades since the book is
/// purely intraday.
#[allow(clippy::too_many_arguments)]
pub fn simulate(
    panel: &PricePanel,
    returns: &ReturnPanel,
    schedule: &UniverseSchedule,
    set: &FactorSet,
    sector_map: Option<&SectorMap>,
    d: usize,
    investment: f64,
    normalize: bool,
) -> Result<(SimReport, Vec<SkippedDate>)> {
    let (days, mut skipped) =
        xsreg::run_backtest_regressions(panel, returns, schedule, set, sector_map, d)?;

    let mut dates = Vec::new();
    let mut daily_pnl = Vec::new();
    let mut holdings_days = Vec::new();
    let mut shares_traded = 0.0;

    for day in &days {
        let holdings = match compute_holdings(
            day.date,
            &day.tickers,
            &day.residuals,
            investment,
            normalize,
        ) {
            Ok(h) => h,
            Err(e) => {
                skipped.push(SkippedDate {
                    date: day.date,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let s = panel
            .dates()
            .iter()
            .position(|d| *d == day.date)
            .expect("regression date is a panel date");
        let mut pnl = 0.0;
        for (idx, &i) in holdings.tickers.iter().enumerate() {
            let open = panel.open(i, s).expect("cross-section cell is valid");
            let close = panel.close(i, s).expect("cross-section cell is valid");
            let h = holdings.dollars[idx];
            pnl += h * (close / open - 1.0);
            shares_traded += 2.0 * h.abs() / open;
        }
        dates.push(day.date);
        daily_pnl.push(pnl);
        holdings_days.push(holdings);
    }

    if daily_pnl.is_empty() {
        return Err(Error::NoUsableDates);
    }

    let mean = factors::sample_mean(&daily_pnl);
    let sd = factors::sample_sd(&daily_pnl);
    let roc = TRADING_DAYS_PER_YEAR * mean / investment;
    let sharpe = if sd > 0.0 {
        Some(TRADING_DAYS_PER_YEAR.sqrt() * mean / sd)
    } else {
        None
    };
    let total: f64 = daily_pnl.iter().sum();
    let cps = if shares_traded > 0.0 {
        100.0 * total / shares_traded
    } else {
        0.0
    };

    Ok((
        SimReport {
            model: set.label(),
            dates,
            daily_pnl,
            holdings: holdings_days,
            roc,
            sharpe,
            cps,
            shares_traded,
            investment,
        },
        skipped,
    ))
}

/// Simulates every factor set in turn, for side-by-side comparison.
#[allow(clippy::too_many_arguments)]
pub fn compare_models(
    panel: &PricePanel,
    returns: &ReturnPanel,
    schedule: &UniverseSchedule,
    specs: &[FactorSet],
    sector_map: Option<&SectorMap>,
    d: usize,
    investment: f64,
    normalize: bool,
) -> Result<Vec<(SimReport, Vec<SkippedDate>)>> {
    if specs.is_empty() {
        return Err(Error::InvalidFactorSpec("no factor specs given".into()));
    }
    specs
        .iter()
        .map(|set| {
            simulate(
                panel, returns, schedule, set, sector_map, d, investment, normalize,
            )
        })
        .collect()
}
