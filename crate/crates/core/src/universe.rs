//! Average-daily-dollar-volume ranking and the rebalanced universe
//! schedule.
//!
//! The backtest range is broken into fixed-length intervals anchored at
//! the earliest backtest date (the last interval may be shorter). Each
//! interval's ticker set comes from ADDV evaluated at the date just
//! before the interval begins, whose trailing window therefore uses only
//! data strictly before the interval — no look-ahead by construction.

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::market_data::PricePanel;

#[derive(Debug, Clone)]
pub struct UniverseParams {
    pub top_n: usize,
    /// 1-based inclusive rank band; overrides `top_n` when present
    /// (e.g. (3001, 4000) picks the stocks ranked between top-3000 and
    /// top-4000).
    pub rank_range: Option<(usize, usize)>,
    pub rebalance_period: usize,
    pub addv_window: usize,
    /// Chronological backtest bounds; defaults to the widest feasible range.
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

impl Default for UniverseParams {
    fn default() -> Self {
        Self {
            top_n: 2000,
            rank_range: None,
            rebalance_period: 21,
            addv_window: 21,
            start: None,
            end: None,
        }
    }
}

/// One rebalance interval: date indices run from `first_index`
/// (chronologically first, i.e. the largest index) down to `last_index`.
#[derive(Debug, Clone)]
pub struct UniverseInterval {
    pub first_index: usize,
    pub last_index: usize,
    /// Panel ticker indices, ascending.
    pub tickers: Vec<usize>,
}

impl UniverseInterval {
    pub fn contains(&self, s: usize) -> bool {
        s <= self.first_index && s >= self.last_index
    }

    /// Date indices in chronological order.
    pub fn date_indices(&self) -> impl Iterator<Item = usize> {
        (self.last_index..=self.first_index).rev()
    }

    /// Number of trading dates in the interval (always at least 1).
    pub fn n_dates(&self) -> usize {
        self.first_index - self.last_index + 1
    }
}

#[derive(Debug, Clone)]
pub struct UniverseSchedule {
    /// Chronological intervals partitioning the backtest range.
    pub intervals: Vec<UniverseInterval>,
    /// Maximum ticker-set size (band width when a rank band is used).
    pub top_n: usize,
    pub rebalance_period: usize,
    pub addv_window: usize,
    pub warnings: Vec<String>,
}

impl UniverseSchedule {
    pub fn interval_for(&self, s: usize) -> Option<&UniverseInterval> {
        self.intervals.iter().find(|iv| iv.contains(s))
    }

    /// All backtest date indices, chronological.
    pub fn date_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.intervals.iter().flat_map(|iv| iv.date_indices())
    }
}

/// Average daily dollar volume at date `s` over the `d` preceding days:
/// `D(i, s) = mean_{r=1..d} volume(i, s+r) * close(i, s+r)`. Tickers with
/// an incomplete window are excluded.
pub fn addv(panel: &PricePanel, s: usize, d: usize) -> Result<Vec<(usize, f64)>> {
    if d == 0 {
        return Err(Error::InvalidParam("addv window must be at least 1".into()));
    }
    let mut out = Vec::new();
    if s + d >= panel.n_dates() {
        return Ok(out);
    }
    'ticker: for i in 0..panel.n_tickers() {
        let mut acc = 0.0;
        for r in 1..=d {
            match (panel.volume(i, s + r), panel.close(i, s + r)) {
                (Some(v), Some(c)) => acc += v * c,
                _ => continue 'ticker,
            }
        }
        out.push((i, acc / d as f64));
    }
    Ok(out)
}

/// Lays out the rebalance intervals and ranks each one's universe by ADDV
/// (descending, ties broken by ascending ticker symbol).
pub fn build_schedule(panel: &PricePanel, params: &UniverseParams) -> Result<UniverseSchedule> {
    let d = params.addv_window;
    let rp = params.rebalance_period;
    if d == 0 || rp == 0 {
        return Err(Error::InvalidParam(
            "addv_window and rebalance_period must be at least 1".into(),
        ));
    }
    let (lo, hi) = match params.rank_range {
        Some((lo, hi)) => {
            if lo == 0 || hi < lo {
                return Err(Error::InvalidParam(format!(
                    "bad rank range ({lo}, {hi}); ranks are 1-based and lo <= hi"
                )));
            }
            (lo, hi)
        }
        None => {
            if params.top_n == 0 {
                return Err(Error::InvalidParam("top_n must be at least 1".into()));
            }
            (1, params.top_n)
        }
    };

    let n_dates = panel.n_dates();
    // The earliest feasible backtest date needs one evaluation date plus a
    // full ADDV window behind it.
    if n_dates < d + 2 {
        return Err(Error::InsufficientHistory {
            needed: d + 2,
            available: n_dates,
        });
    }
    let feasible_first = n_dates - d - 2;

    let first = match params.start {
        None => feasible_first,
        Some(start) => {
            // Chronologically first backtest date: the oldest date >= start.
            let s = (0..n_dates).rev().find(|&s| panel.date(s) >= start);
            let s = s.ok_or_else(|| {
                Error::InvalidParam(format!("no panel dates on or after {start}"))
            })?;
            if s > feasible_first {
                return Err(Error::InsufficientHistory {
                    needed: d + 2,
                    available: n_dates - s,
                });
            }
            s
        }
    };
    let last = match params.end {
        None => 0,
        Some(end) => (0..n_dates)
            .find(|&s| panel.date(s) <= end)
            .ok_or_else(|| Error::InvalidParam(format!("no panel dates on or before {end}")))?,
    };
    if last > first {
        return Err(Error::InvalidParam("backtest date range is empty".into()));
    }

    let mut warnings = Vec::new();
    let mut intervals = Vec::new();
    let mut first_index = first;
    loop {
        let last_index = if first_index - last + 1 > rp {
            first_index + 1 - rp
        } else {
            last
        };

        let eval = first_index + 1;
        let mut ranked = addv(panel, eval, d)?;
        // descending dollar volume; ticker indices ascend with symbols, so
        // index order is the lexicographic tie-break
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

        let available = ranked.len();
        let hi_eff = hi.min(available);
        if hi_eff < hi {
            warnings.push(format!(
                "interval starting {}: only {} tickers ranked; clipping selection to {}",
                panel.date(first_index),
                available,
                hi_eff
            ));
        }
        let mut tickers: Vec<usize> = if lo <= hi_eff {
            ranked[lo - 1..hi_eff].iter().map(|(i, _)| *i).collect()
        } else {
            Vec::new()
        };
        tickers.sort_unstable();

        intervals.push(UniverseInterval {
            first_index,
            last_index,
            tickers,
        });

        if last_index == last {
            break;
        }
        first_index = last_index - 1;
    }

    Ok(UniverseSchedule {
        intervals,
        top_n: hi - lo + 1,
        rebalance_period: rp,
        addv_window: d,
        warnings,
    })
}
