//! Factor loading construction: price ("size"), momentum, intraday
//! high-low volatility, volume ("liquidity"), binary sector indicators,
//! and the Gaussian rank normalization applied to the volatility and
//! volume columns.
//!
//! Loadings at date `s` look strictly backward: every input comes from
//! dates `s + 1` and older (index `s + 1` is the previous trading day).

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::Array2;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::market_data::PricePanel;

/// Trailing window, in trading days, for the volatility, volume and ADDV
/// averages (one trading month).
pub const DEFAULT_WINDOW: usize = 21;

/// Floor applied to the argument of the outer logarithm in the volatility
/// factors, so a flat-priced ticker gets an extreme-but-finite loading
/// instead of -inf.
pub const LOG_FLOOR: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorName {
    Int,
    Sectors,
    Prc,
    Rprc,
    Mom,
    Hlv,
    Hlv1,
    Hlv2,
    Vol,
    Vol1,
}

impl FactorName {
    pub fn as_str(&self) -> &'static str {
        match self {
            FactorName::Int => "int",
            FactorName::Sectors => "S",
            FactorName::Prc => "prc",
            FactorName::Rprc => "rprc",
            FactorName::Mom => "mom",
            FactorName::Hlv => "hlv",
            FactorName::Hlv1 => "hlv1",
            FactorName::Hlv2 => "hlv2",
            FactorName::Vol => "vol",
            FactorName::Vol1 => "vol1",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "int" => Ok(FactorName::Int),
            "sectors" | "S" => Ok(FactorName::Sectors),
            "prc" => Ok(FactorName::Prc),
            "rprc" => Ok(FactorName::Rprc),
            "mom" => Ok(FactorName::Mom),
            "hlv" => Ok(FactorName::Hlv),
            "hlv1" => Ok(FactorName::Hlv1),
            "hlv2" => Ok(FactorName::Hlv2),
            "vol" => Ok(FactorName::Vol),
            "vol1" => Ok(FactorName::Vol1),
            other => Err(Error::InvalidFactorSpec(format!(
                "unknown factor `{other}`"
            ))),
        }
    }

    /// Volatility and volume columns are rank-normalized; price and
    /// momentum are used raw.
    pub fn is_normalized(&self) -> bool {
        matches!(
            self,
            FactorName::Hlv
                | FactorName::Hlv1
                | FactorName::Hlv2
                | FactorName::Vol
                | FactorName::Vol1
        )
    }
}

impl std::fmt::Display for FactorName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An ordered, validated list of factors defining one regression model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactorSet {
    factors: Vec<FactorName>,
}

impl FactorSet {
    pub fn new(factors: Vec<FactorName>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidFactorSpec("empty factor list".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if factors[..i].contains(f) {
                return Err(Error::InvalidFactorSpec(format!("duplicate factor `{f}`")));
            }
        }
        let has_int = factors.contains(&FactorName::Int);
        let has_sectors = factors.contains(&FactorName::Sectors);
        if has_int && has_sectors {
            // The sector columns sum to the unit vector, so the intercept
            // is already subsumed in them.
            return Err(Error::InvalidFactorSpec(
                "int and sectors are mutually exclusive".into(),
            ));
        }
        Ok(Self { factors })
    }

    /// Parses a comma-separated list such as `int,prc,mom,hlv,vol`.
    pub fn parse(spec: &str) -> Result<Self> {
        let names = spec
            .split(',')
            .map(|s| FactorName::parse(s.trim()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(names)
    }

    pub fn factors(&self) -> &[FactorName] {
        &self.factors
    }

    pub fn has_int(&self) -> bool {
        self.factors.contains(&FactorName::Int)
    }

    pub fn has_sectors(&self) -> bool {
        self.factors.contains(&FactorName::Sectors)
    }

    /// Human-readable model label, e.g. `int only` or `S+prc+mom+hlv+vol`.
    pub fn label(&self) -> String {
        if self.factors.len() == 1 {
            format!("{} only", self.factors[0])
        } else {
            self.factors
                .iter()
                .map(|f| f.as_str())
                .collect::<Vec<_>>()
                .join("+")
        }
    }
}

impl std::fmt::Display for FactorSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// Ticker-to-sector assignment; sector ids are integers starting at 1 and
/// each covered ticker belongs to exactly one sector.
#[derive(Debug, Clone, Default)]
pub struct SectorMap {
    assignment: BTreeMap<String, u32>,
}

impl SectorMap {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, u32)>) -> Result<Self> {
        let mut assignment = BTreeMap::new();
        for (ticker, sector) in pairs {
            if sector == 0 {
                return Err(Error::InvalidParam(format!(
                    "sector ids start at 1; got 0 for {ticker}"
                )));
            }
            if assignment.insert(ticker.clone(), sector).is_some() {
                return Err(Error::InvalidParam(format!(
                    "ticker {ticker} assigned to more than one sector"
                )));
            }
        }
        Ok(Self { assignment })
    }

    /// Loads a `ticker,sector` CSV.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        let headers = reader.headers().map_err(|e| Error::Csv {
            path: path.display().to_string(),
            source: e,
        })?;
        let found: Vec<&str> = headers.iter().collect();
        if found != ["ticker", "sector"] {
            return Err(Error::MalformedHeader {
                path: path.display().to_string(),
                expected: "ticker,sector".into(),
                found: found.join(","),
            });
        }
        let mut pairs = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| Error::Csv {
                path: path.display().to_string(),
                source: e,
            })?;
            let ticker = record.get(0).unwrap_or("").to_string();
            let sector: u32 = record.get(1).unwrap_or("").trim().parse().map_err(|_| {
                Error::InvalidParam(format!("bad sector id for {ticker} in {}", path.display()))
            })?;
            pairs.push((ticker, sector));
        }
        Self::from_pairs(pairs)
    }

    pub fn get(&self, ticker: &str) -> Option<u32> {
        self.assignment.get(ticker).copied()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// Per-date loadings: an N x K matrix over the surviving cross-section.
/// `tickers` are indices into the panel's ticker list.
#[derive(Debug, Clone)]
pub struct LoadingsMatrix {
    pub date: NaiveDate,
    pub tickers: Vec<usize>,
    pub columns: Vec<String>,
    pub values: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HlvVariant {
    /// Half-log of the mean squared relative high-low range.
    Hlv,
    /// Log of the mean relative high-low range.
    Hlv1,
    /// Log of the mean absolute open-to-close log return.
    Hlv2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolVariant {
    /// Log of the mean raw share volume.
    Vol,
    /// Log of the mean split-adjusted share volume.
    Vol1,
}

// ---------------------------------------------------------------------------
// Per-ticker raw loading values. `None` means the ticker lacks the inputs
// at this date and drops out of the cross-section.
// ---------------------------------------------------------------------------

fn prc_raw(panel: &PricePanel, i: usize, s: usize, adjusted: bool) -> Option<f64> {
    if s + 1 >= panel.n_dates() {
        return None;
    }
    let price = if adjusted {
        panel.adj_close(i, s + 1)?
    } else {
        panel.close(i, s + 1)?
    };
    Some(price.ln())
}

fn mom_raw(panel: &PricePanel, i: usize, s: usize) -> Option<f64> {
    if s + 1 >= panel.n_dates() {
        return None;
    }
    let open = panel.open(i, s + 1)?;
    let close = panel.close(i, s + 1)?;
    Some((close / open).ln())
}

fn hlv_raw(panel: &PricePanel, i: usize, s: usize, d: usize, variant: HlvVariant) -> Option<f64> {
    if d == 0 || s + d >= panel.n_dates() {
        return None;
    }
    let mut acc = 0.0;
    for r in 1..=d {
        let high = panel.high(i, s + r)?;
        let low = panel.low(i, s + r)?;
        let close = panel.close(i, s + r)?;
        match variant {
            HlvVariant::Hlv => {
                let range = (high - low) / close;
                acc += range * range;
            }
            HlvVariant::Hlv1 => acc += (high - low).abs() / close,
            HlvVariant::Hlv2 => {
                let open = panel.open(i, s + r)?;
                acc += (close / open).ln().abs();
            }
        }
    }
    let mean = (acc / d as f64).max(LOG_FLOOR);
    Some(match variant {
        HlvVariant::Hlv => 0.5 * mean.ln(),
        HlvVariant::Hlv1 | HlvVariant::Hlv2 => mean.ln(),
    })
}

fn vol_raw(panel: &PricePanel, i: usize, s: usize, d: usize, variant: VolVariant) -> Option<f64> {
    if d == 0 || s + d >= panel.n_dates() {
        return None;
    }
    let mut acc = 0.0;
    for r in 1..=d {
        let volume = panel.volume(i, s + r)?;
        match variant {
            VolVariant::Vol => acc += volume,
            VolVariant::Vol1 => {
                let close = panel.close(i, s + r)?;
                let adj_close = panel.adj_close(i, s + r)?;
                acc += volume * close / adj_close;
            }
        }
    }
    let mean = acc / d as f64;
    if mean <= 0.0 {
        return None; // a ticker that traded nothing over the window drops out
    }
    Some(mean.ln())
}

// ---------------------------------------------------------------------------
// Column operations over the whole panel.
// ---------------------------------------------------------------------------

/// Unit loading column ("market beta" stand-in).
pub fn beta_int(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParam("empty cross-section".into()));
    }
    Ok(vec![1.0; n])
}

/// Log of the previous day's close (adjusted or raw), per ticker.
pub fn beta_prc(panel: &PricePanel, s: usize, adjusted: bool) -> Vec<(usize, f64)> {
    (0..panel.n_tickers())
        .filter_map(|i| prc_raw(panel, i, s, adjusted).map(|v| (i, v)))
        .collect()
}

/// Previous day's open-to-close log return, per ticker.
pub fn beta_mom(panel: &PricePanel, s: usize) -> Vec<(usize, f64)> {
    (0..panel.n_tickers())
        .filter_map(|i| mom_raw(panel, i, s).map(|v| (i, v)))
        .collect()
}

/// Intraday-range volatility loading over a `d`-day trailing window
/// (pre-normalization).
pub fn beta_hlv(panel: &PricePanel, s: usize, d: usize, variant: HlvVariant) -> Vec<(usize, f64)> {
    (0..panel.n_tickers())
        .filter_map(|i| hlv_raw(panel, i, s, d, variant).map(|v| (i, v)))
        .collect()
}

/// Average-volume liquidity loading over a `d`-day trailing window
/// (pre-normalization).
pub fn beta_vol(panel: &PricePanel, s: usize, d: usize, variant: VolVariant) -> Vec<(usize, f64)> {
    (0..panel.n_tickers())
        .filter_map(|i| vol_raw(panel, i, s, d, variant).map(|v| (i, v)))
        .collect()
}

/// Conforms a column to a normal shape while pinning its moments: values
/// are ranked (ties get their average rank), mapped through the standard
/// normal quantile at `(rank - 0.5) / n`, then rescaled so the output's
/// sample standard deviation equals the input's exactly and its sample
/// mean equals `target_mean` exactly. Order relations are preserved and
/// ties stay tied.
pub fn normalize_gaussian(raw: &[f64], target_mean: f64) -> Result<Vec<f64>> {
    let n = raw.len();
    if n < 2 {
        return Err(Error::InvalidParam(format!(
            "normalization needs at least 2 values, got {n}"
        )));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParam("non-finite value in column".into()));
    }
    let sd_in = sample_sd(raw);
    if sd_in == 0.0 {
        return Err(Error::ZeroStdDev);
    }

    let ranks = average_ranks(raw);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let z: Vec<f64> = ranks
        .iter()
        .map(|r| normal.inverse_cdf((r - 0.5) / n as f64))
        .collect();
    let mean_z = z.iter().sum::<f64>() / n as f64;
    let sd_z = sample_sd(&z);
    debug_assert!(sd_z > 0.0, "distinct inputs imply distinct quantiles");
    let scale = sd_in / sd_z;
    Ok(z.iter()
        .map(|zi| target_mean + (zi - mean_z) * scale)
        .collect())
}

/// 1-based ranks with ties averaged.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end (1-based); average rank of the tie group
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

pub(crate) fn sample_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub(crate) fn sample_sd(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = sample_mean(values);
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Binary sector indicator columns over a cross-section. Returns the sector
/// ids actually present (ascending) and the N x S matrix; sectors with no
/// members in the cross-section are dropped. Every ticker must be covered.
pub fn sector_loadings(map: &SectorMap, tickers: &[&str]) -> Result<(Vec<u32>, Array2<f64>)> {
    let mut assigned = Vec::with_capacity(tickers.len());
    for t in tickers {
        match map.get(t) {
            Some(sec) => assigned.push(sec),
            None => return Err(Error::UncoveredTicker((*t).to_string())),
        }
    }
    let mut present: Vec<u32> = assigned.clone();
    present.sort_unstable();
    present.dedup();
    let mut values = Array2::zeros((tickers.len(), present.len()));
    for (row, sec) in assigned.iter().enumerate() {
        let col = present.binary_search(sec).expect("sector present");
        values[(row, col)] = 1.0;
    }
    Ok((present, values))
}

/// Builds the per-date loadings matrix for one factor set. The
/// cross-section keeps exactly the `universe` tickers for which every
/// requested column is computable (and, when sectors are requested, which
/// have a sector assignment). Volatility and volume columns are
/// rank-normalized to mean zero; price and momentum stay raw. The result
/// must be full column rank.
pub fn assemble_loadings(
    panel: &PricePanel,
    s: usize,
    set: &FactorSet,
    sector_map: Option<&SectorMap>,
    d: usize,
    universe: &[usize],
) -> Result<LoadingsMatrix> {
    if set.has_sectors() && sector_map.is_none() {
        return Err(Error::MissingSectorMap);
    }
    let date = panel.date(s);

    // Raw values per requested factor, gathered per ticker so membership is
    // the intersection of availability across all requested columns.
    let mut survivors: Vec<usize> = Vec::with_capacity(universe.len());
    let mut raw_cols: Vec<Vec<f64>> = vec![Vec::new(); set.factors().len()];

    'ticker: for &i in universe {
        let mut values = Vec::with_capacity(set.factors().len());
        for f in set.factors() {
            let v = match f {
                FactorName::Int => Some(1.0),
                FactorName::Sectors => {
                    let covered = sector_map
                        .expect("checked above")
                        .get(panel.ticker(i))
                        .is_some();
                    if covered {
                        Some(f64::NAN) // placeholder; sector columns built below
                    } else {
                        None
                    }
                }
                FactorName::Prc => prc_raw(panel, i, s, true),
                FactorName::Rprc => prc_raw(panel, i, s, false),
                FactorName::Mom => mom_raw(panel, i, s),
                FactorName::Hlv => hlv_raw(panel, i, s, d, HlvVariant::Hlv),
                FactorName::Hlv1 => hlv_raw(panel, i, s, d, HlvVariant::Hlv1),
                FactorName::Hlv2 => hlv_raw(panel, i, s, d, HlvVariant::Hlv2),
                FactorName::Vol => vol_raw(panel, i, s, d, VolVariant::Vol),
                FactorName::Vol1 => vol_raw(panel, i, s, d, VolVariant::Vol1),
            };
            match v {
                Some(v) => values.push(v),
                None => continue 'ticker,
            }
        }
        survivors.push(i);
        for (col, v) in values.into_iter().enumerate() {
            raw_cols[col].push(v);
        }
    }

    if survivors.is_empty() {
        return Err(Error::EmptyCrossSection { date });
    }
    let n = survivors.len();

    // Expand into named columns, normalizing where the model calls for it.
    let mut columns: Vec<String> = Vec::new();
    let mut data: Vec<Vec<f64>> = Vec::new();
    for (pos, f) in set.factors().iter().enumerate() {
        match f {
            FactorName::Sectors => {
                let symbols: Vec<&str> = survivors.iter().map(|&i| panel.ticker(i)).collect();
                let (ids, m) = sector_loadings(sector_map.expect("checked above"), &symbols)?;
                for (c, id) in ids.iter().enumerate() {
                    columns.push(format!("S{id}"));
                    data.push(m.column(c).to_vec());
                }
            }
            FactorName::Int => {
                columns.push("int".into());
                data.push(beta_int(n)?);
            }
            name => {
                columns.push(name.as_str().into());
                let col = if name.is_normalized() {
                    normalize_gaussian(&raw_cols[pos], 0.0)?
                } else {
                    raw_cols[pos].clone()
                };
                data.push(col);
            }
        }
    }

    let k = data.len();
    let mut values = Array2::zeros((n, k));
    for (c, col) in data.iter().enumerate() {
        for (r, v) in col.iter().enumerate() {
            values[(r, c)] = *v;
        }
    }

    let rank = linalg::qr_rank(&values);
    if rank < k {
        return Err(Error::RankDeficient { rank, cols: k });
    }

    Ok(LoadingsMatrix {
        date,
        tickers: survivors,
        columns,
        values,
    })
}
