//! Daily bar ingestion, adjusted series, and overnight returns.
//!
//! Date indexing counts back from the present: index 0 is the most recent
//! trading date in the panel and index `s + 1` is the trading day before
//! index `s`. Input files are chronological; the loader performs the
//! reversal. Cells that are absent or fail the bar sanity checks are
//! masked out rather than aborting the load: a stock simply drops out of
//! the affected dates' cross-sections.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 8] = [
    "date",
    "ticker",
    "open",
    "high",
    "low",
    "close",
    "adj_close",
    "volume",
];

/// One day of unadjusted OHLC prices plus the split/dividend adjusted close
/// and the share volume.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceBar {
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub adj_close: f64,
    pub volume: f64,
}

impl PriceBar {
    /// Sanity checks: positive prices, non-negative volume, and the high/low
    /// range bracketing both open and close.
    pub fn is_valid(&self) -> bool {
        let prices = [self.open, self.high, self.low, self.close, self.adj_close];
        prices.iter().all(|p| p.is_finite() && *p > 0.0)
            && self.volume.is_finite()
            && self.volume >= 0.0
            && self.low <= self.open.min(self.close)
            && self.high >= self.open.max(self.close)
    }
}

/// Aligned ticker-by-date table of daily bars with a validity mask and,
/// once derived, the adjusted open series.
#[derive(Debug, Clone)]
pub struct PricePanel {
    tickers: Vec<String>,
    /// Index 0 is the most recent date; strictly decreasing chronologically.
    dates: Vec<NaiveDate>,
    /// Ticker-major: cell (i, s) lives at `i * dates.len() + s`.
    bars: Vec<Option<PriceBar>>,
    valid: Vec<bool>,
    adj_open: Option<Vec<Option<f64>>>,
}

impl PricePanel {
    /// Builds a panel from pre-aligned cells. `dates` must be strictly
    /// decreasing (most recent first) and `bars` ticker-major with
    /// `tickers.len() * dates.len()` entries.
    pub fn from_bars(
        tickers: Vec<String>,
        dates: Vec<NaiveDate>,
        bars: Vec<Option<PriceBar>>,
    ) -> Result<Self> {
        if tickers.is_empty() || dates.is_empty() {
            return Err(Error::EmptyPanel);
        }
        if bars.len() != tickers.len() * dates.len() {
            return Err(Error::InvalidParam(format!(
                "bars length {} does not match {} tickers x {} dates",
                bars.len(),
                tickers.len(),
                dates.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidParam(
                "dates must be strictly decreasing (most recent first)".into(),
            ));
        }
        let valid = bars
            .iter()
            .map(|b| b.map(|bar| bar.is_valid()).unwrap_or(false))
            .collect();
        Ok(Self {
            tickers,
            dates,
            bars,
            valid,
            adj_open: None,
        })
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn ticker(&self, i: usize) -> &str {
        &self.tickers[i]
    }

    /// Dates most-recent-first.
    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn date(&self, s: usize) -> NaiveDate {
        self.dates[s]
    }

    fn cell(&self, i: usize, s: usize) -> usize {
        i * self.dates.len() + s
    }

    pub fn bar(&self, i: usize, s: usize) -> Option<&PriceBar> {
        self.bars[self.cell(i, s)].as_ref()
    }

    pub fn is_valid(&self, i: usize, s: usize) -> bool {
        self.valid[self.cell(i, s)]
    }

    fn field(&self, i: usize, s: usize, f: impl Fn(&PriceBar) -> f64) -> Option<f64> {
        let idx = self.cell(i, s);
        if self.valid[idx] {
            self.bars[idx].as_ref().map(f)
        } else {
            None
        }
    }

    pub fn open(&self, i: usize, s: usize) -> Option<f64> {
        self.field(i, s, |b| b.open)
    }

    pub fn high(&self, i: usize, s: usize) -> Option<f64> {
        self.field(i, s, |b| b.high)
    }

    pub fn low(&self, i: usize, s: usize) -> Option<f64> {
        self.field(i, s, |b| b.low)
    }

    pub fn close(&self, i: usize, s: usize) -> Option<f64> {
        self.field(i, s, |b| b.close)
    }

    pub fn adj_close(&self, i: usize, s: usize) -> Option<f64> {
        self.field(i, s, |b| b.adj_close)
    }

    pub fn volume(&self, i: usize, s: usize) -> Option<f64> {
        self.field(i, s, |b| b.volume)
    }

    pub fn has_adj_open(&self) -> bool {
        self.adj_open.is_some()
    }

    /// Derived adjusted open; `None` for invalid cells or before
    /// [`derive_adjusted_open`] has run.
    pub fn adj_open(&self, i: usize, s: usize) -> Option<f64> {
        let idx = self.cell(i, s);
        self.adj_open.as_ref().and_then(|v| v[idx])
    }

    pub fn count_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct BarRow {
    date: String,
    ticker: String,
    open: f64,
    high: f64,
    low: f64,
    close: f64,
    adj_close: f64,
    volume: f64,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.display().to_string(),
        source: e,
    }
}

/// Loads a daily-bar CSV (`date,ticker,open,high,low,close,adj_close,volume`,
/// chronological or not) into a panel aligned on the union of trading dates.
/// Rows failing the bar sanity checks mark their cell invalid; duplicate
/// (ticker, date) rows are an error.
pub fn load_panel(
    path: impl AsRef<Path>,
    ticker_filter: Option<&HashSet<String>>,
) -> Result<PricePanel> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;

    let headers = reader.headers().map_err(|e| csv_err(path, e))?;
    let found: Vec<&str> = headers.iter().collect();
    if found != CSV_HEADER {
        return Err(Error::MalformedHeader {
            path: path.display().to_string(),
            expected: CSV_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut rows: Vec<(String, NaiveDate, PriceBar)> = Vec::new();
    let mut seen: HashSet<(String, NaiveDate)> = HashSet::new();
    for record in reader.deserialize::<BarRow>() {
        let row = record.map_err(|e| csv_err(path, e))?;
        if let Some(filter) = ticker_filter {
            if !filter.contains(&row.ticker) {
                continue;
            }
        }
        let date = NaiveDate::parse_from_str(&row.date, "%Y-%m-%d").map_err(|_| {
            Error::InvalidParam(format!("bad date `{}` in {}", row.date, path.display()))
        })?;
        if !seen.insert((row.ticker.clone(), date)) {
            return Err(Error::DuplicateRow {
                ticker: row.ticker,
                date,
            });
        }
        let bar = PriceBar {
            open: row.open,
            high: row.high,
            low: row.low,
            close: row.close,
            adj_close: row.adj_close,
            volume: row.volume,
        };
        rows.push((row.ticker, date, bar));
    }
    if rows.is_empty() {
        return Err(Error::EmptyPanel);
    }

    let tickers: Vec<String> = rows
        .iter()
        .map(|(t, _, _)| t.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut dates: Vec<NaiveDate> = rows
        .iter()
        .map(|(_, d, _)| *d)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    dates.reverse(); // most recent first

    let ticker_idx: BTreeMap<&str, usize> = tickers
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i))
        .collect();
    let date_idx: BTreeMap<NaiveDate, usize> =
        dates.iter().enumerate().map(|(s, d)| (*d, s)).collect();

    let mut bars: Vec<Option<PriceBar>> = vec![None; tickers.len() * dates.len()];
    for (ticker, date, bar) in rows {
        let i = ticker_idx[ticker.as_str()];
        let s = date_idx[&date];
        bars[i * dates.len() + s] = Some(bar);
    }

    PricePanel::from_bars(tickers, dates, bars)
}

/// Writes every present cell back out in chronological order, one row per
/// (ticker, date). Floats are printed in shortest round-trip form so a
/// reload reproduces them bit-exactly.
pub fn write_panel(panel: &PricePanel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for s in (0..panel.n_dates()).rev() {
        for i in 0..panel.n_tickers() {
            if let Some(bar) = panel.bar(i, s) {
                let row = BarRow {
                    date: panel.date(s).format("%Y-%m-%d").to_string(),
                    ticker: panel.ticker(i).to_string(),
                    open: bar.open,
                    high: bar.high,
                    low: bar.low,
                    close: bar.close,
                    adj_close: bar.adj_close,
                    volume: bar.volume,
                };
                writer.serialize(row).map_err(|e| csv_err(path, e))?;
            }
        }
    }
    writer.flush().map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

/// Fills in the adjusted open series: vendors supply only an adjusted close,
/// so the open is scaled by the same per-day adjustment ratio,
/// `adj_open = open * adj_close / close`.
pub fn derive_adjusted_open(mut panel: PricePanel) -> PricePanel {
    let n = panel.tickers.len() * panel.dates.len();
    let mut adj_open = vec![None; n];
    for (idx, slot) in adj_open.iter_mut().enumerate() {
        if panel.valid[idx] {
            let bar = panel.bars[idx].as_ref().expect("valid cell has a bar");
            *slot = Some(bar.open * bar.adj_close / bar.close);
        }
    }
    panel.adj_open = Some(adj_open);
    panel
}

/// Ticker-by-date table of overnight log-returns; a value is present only
/// where both the day's bar and the previous day's bar are valid.
#[derive(Debug, Clone)]
pub struct ReturnPanel {
    n_dates: usize,
    dates: Vec<NaiveDate>,
    values: Vec<Option<f64>>,
}

impl ReturnPanel {
    pub fn get(&self, i: usize, s: usize) -> Option<f64> {
        self.values[i * self.n_dates + s]
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }
}

/// Close-to-next-open log return: `R(i, s) = ln(adj_open(i, s) / adj_close(i, s+1))`,
/// both prices fully adjusted. Requires [`derive_adjusted_open`] to have run.
pub fn overnight_returns(panel: &PricePanel) -> Result<ReturnPanel> {
    if !panel.has_adj_open() {
        return Err(Error::AdjustedOpenMissing);
    }
    let n_dates = panel.n_dates();
    let mut values = vec![None; panel.n_tickers() * n_dates];
    for i in 0..panel.n_tickers() {
        for s in 0..n_dates {
            if s + 1 >= n_dates {
                continue;
            }
            if let (Some(ao), Some(prev_ac)) = (panel.adj_open(i, s), panel.adj_close(i, s + 1)) {
                values[i * n_dates + s] = Some((ao / prev_ac).ln());
            }
        }
    }
    Ok(ReturnPanel {
        n_dates,
        dates: panel.dates().to_vec(),
        values,
    })
}
