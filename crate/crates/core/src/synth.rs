//! Synthetic daily-bar panels: geometric random-walk prices with bounded
//! intraday ranges, and an optional planted factor structure whose
//! overnight returns are `R = B f + noise` with the true loadings and
//! factor returns recorded for recovery tests.

use chrono::{Datelike, NaiveDate, Weekday};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::market_data::{PriceBar, PricePanel};

/// One planted factor: the daily factor-return series is drawn
/// `N(ret_mean, ret_sd^2)`.
#[derive(Debug, Clone, Copy)]
pub struct PlantedFactor {
    pub ret_mean: f64,
    pub ret_sd: f64,
}

/// Planted factor structure. The first loading column is the unit vector;
/// the rest are standard-normal draws fixed across dates.
#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub factors: Vec<PlantedFactor>,
    /// Standard deviation of the idiosyncratic noise added per (ticker, date).
    pub noise_sd: f64,
    /// Fraction of each stock's idiosyncratic overnight move that reverts
    /// during the following session. Zero keeps intraday moves independent;
    /// positive values give the mean-reversion alpha a real edge to find.
    pub intraday_reversion: f64,
}

impl PlantedSpec {
    /// Five factors: one with a clearly nonzero mean return, one with zero
    /// mean, and three more zero-mean factors with mixed volatilities.
    pub fn five_factor_default(noise_sd: f64) -> Self {
        Self {
            factors: vec![
                PlantedFactor {
                    ret_mean: 0.0,
                    ret_sd: 0.002,
                }, // intercept column
                PlantedFactor {
                    ret_mean: 0.003,
                    ret_sd: 0.001,
                }, // nonzero mean
                PlantedFactor {
                    ret_mean: 0.0,
                    ret_sd: 0.001,
                }, // zero mean
                PlantedFactor {
                    ret_mean: 0.0,
                    ret_sd: 0.002,
                },
                PlantedFactor {
                    ret_mean: 0.0,
                    ret_sd: 0.0015,
                },
            ],
            noise_sd,
            intraday_reversion: 0.0,
        }
    }
}

/// Ground truth recorded alongside a planted panel.
#[derive(Debug, Clone)]
pub struct PlantedTruth {
    /// n_tickers x K, fixed across dates; column 0 is the unit vector.
    pub loadings: Array2<f64>,
    /// (n_dates - 1) x K; row `s` holds the factor returns realized in the
    /// overnight return at date index `s`.
    pub factor_returns: Array2<f64>,
    pub noise_sd: f64,
}

/// Trading dates: weekdays walking back from a fixed anchor, most recent
/// first.
fn trading_dates(n_dates: usize) -> Vec<NaiveDate> {
    let mut dates = Vec::with_capacity(n_dates);
    let mut day = NaiveDate::from_ymd_opt(2014, 9, 5).unwrap();
    while dates.len() < n_dates {
        if !matches!(day.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(day);
        }
        day = day.pred_opt().expect("date in range");
    }
    dates
}

pub fn ticker_symbol(i: usize) -> String {
    format!("T{i:04}")
}

/// Deterministic synthetic panel for a given seed. Without a planted spec,
/// closes follow a geometric random walk; with one, the overnight returns
/// are exactly `B f + noise` and the truth is returned for later recovery
/// checks (adjustments are turned off in planted mode so the planted
/// returns survive the adjusted-open derivation bit-for-bit up to
/// rounding).
pub fn generate_synthetic_panel(
    n_tickers: usize,
    n_dates: usize,
    planted: Option<&PlantedSpec>,
    seed: u64,
) -> Result<(PricePanel, Option<PlantedTruth>)> {
    if n_tickers < 2 {
        return Err(Error::InvalidParam(format!(
            "need at least 2 tickers, got {n_tickers}"
        )));
    }
    if n_dates < 24 {
        return Err(Error::InvalidParam(format!(
            "need at least 24 dates (burn-in plus one regression date), got {n_dates}"
        )));
    }
    if let Some(spec) = planted {
        if spec.factors.is_empty() {
            return Err(Error::InvalidParam("planted spec has no factors".into()));
        }
        if spec.noise_sd < 0.0 {
            return Err(Error::InvalidParam("noise_sd must be non-negative".into()));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let dates = trading_dates(n_dates);
    let tickers: Vec<String> = (0..n_tickers).map(ticker_symbol).collect();

    // Per-ticker scales.
    let base_price: Vec<f64> = (0..n_tickers)
        .map(|_| 5.0 * (100.0f64 / 5.0).powf(rng.random::<f64>()) * rng.random_range(1.0..4.0))
        .collect();
    let base_volume: Vec<f64> = (0..n_tickers)
        .map(|_| 1e4 * (1e7f64 / 1e4).powf(rng.random::<f64>()))
        .collect();

    // Planted structure: loadings and factor returns drawn up front.
    let truth = planted.map(|spec| {
        let k = spec.factors.len();
        let mut loadings = Array2::zeros((n_tickers, k));
        for i in 0..n_tickers {
            loadings[(i, 0)] = 1.0;
            for a in 1..k {
                loadings[(i, a)] = std_normal.sample(&mut rng);
            }
        }
        let mut factor_returns = Array2::zeros((n_dates - 1, k));
        for s in 0..n_dates - 1 {
            for (a, f) in spec.factors.iter().enumerate() {
                factor_returns[(s, a)] = f.ret_mean + f.ret_sd * std_normal.sample(&mut rng);
            }
        }
        PlantedTruth {
            loadings,
            factor_returns,
            noise_sd: spec.noise_sd,
        }
    });

    let mut bars: Vec<Option<PriceBar>> = vec![None; n_tickers * n_dates];
    for i in 0..n_tickers {
        // Adjustment events (splits), oldest-first chronological positions.
        // Planted mode stays unadjusted.
        let mut events: Vec<(usize, f64)> = Vec::new();
        if planted.is_none() && n_dates > 40 {
            let n_events = rng.random_range(0..=2);
            for _ in 0..n_events {
                let t = rng.random_range(20..n_dates - 1);
                let ratio = if rng.random::<bool>() { 0.5 } else { 2.0 };
                events.push((t, ratio));
            }
        }

        // Chronological walk: t = 0 is the oldest date, s = n_dates - 1 - t.
        let mut close = base_price[i];
        let mut prev_close = close;
        for t in 0..n_dates {
            let s = n_dates - 1 - t;
            // idiosyncratic part of the overnight move, fed into the
            // intraday return when reversion is planted
            let mut idio = 0.0;
            let open = if t == 0 {
                close * (0.003 * std_normal.sample(&mut rng)).exp()
            } else {
                let overnight = match &truth {
                    Some(truth) => {
                        let mut r = 0.0;
                        for a in 0..truth.factor_returns.ncols() {
                            r += truth.loadings[(i, a)] * truth.factor_returns[(s, a)];
                        }
                        idio = truth.noise_sd * std_normal.sample(&mut rng);
                        r + idio
                    }
                    None => 0.012 * std_normal.sample(&mut rng),
                };
                prev_close * overnight.exp()
            };
            let intraday = match planted {
                Some(spec) => -spec.intraday_reversion * idio + 0.004 * std_normal.sample(&mut rng),
                None => 0.010 * std_normal.sample(&mut rng),
            };
            close = open * intraday.exp();

            let up = 1.0 + 0.006 * std_normal.sample(&mut rng).abs();
            let down = 1.0 - 0.006 * std_normal.sample(&mut rng).abs();
            let high = open.max(close) * up;
            let low = (open.min(close) * down).max(f64::MIN_POSITIVE);

            // Cumulative adjustment from events strictly after t; most
            // recent bars carry factor 1.
            let adj_factor: f64 = events
                .iter()
                .filter(|(et, _)| *et > t)
                .map(|(_, ratio)| ratio)
                .product();
            let volume = (base_volume[i] * (0.3 * std_normal.sample(&mut rng)).exp()).round();

            bars[i * n_dates + s] = Some(PriceBar {
                open,
                high,
                low,
                close,
                adj_close: close * adj_factor,
                volume,
            });
            prev_close = close;
        }
    }

    let panel = PricePanel::from_bars(tickers, dates, bars)?;
    Ok((panel, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market_data::{derive_adjusted_open, overnight_returns};

    fn panels_equal(a: &PricePanel, b: &PricePanel) -> bool {
        if a.n_tickers() != b.n_tickers() || a.n_dates() != b.n_dates() {
            return false;
        }
        for i in 0..a.n_tickers() {
            for s in 0..a.n_dates() {
                if a.bar(i, s) != b.bar(i, s) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn fixed_seed_is_bit_identical() {
        let (a, _) = generate_synthetic_panel(10, 30, None, 7).unwrap();
        let (b, _) = generate_synthetic_panel(10, 30, None, 7).unwrap();
        assert!(panels_equal(&a, &b));
    }

    #[test]
    fn seed_change_changes_data() {
        let (a, _) = generate_synthetic_panel(10, 30, None, 7).unwrap();
        let (b, _) = generate_synthetic_panel(10, 30, None, 8).unwrap();
        assert!(!panels_equal(&a, &b));
    }

    #[test]
    fn all_cells_are_valid() {
        let (panel, _) = generate_synthetic_panel(20, 60, None, 3).unwrap();
        assert_eq!(panel.count_valid(), 20 * 60);
    }

    #[test]
    fn rejects_tiny_dimensions() {
        assert!(generate_synthetic_panel(1, 30, None, 0).is_err());
        assert!(generate_synthetic_panel(5, 23, None, 0).is_err());
    }

    #[test]
    fn planted_returns_match_truth() {
        let spec = PlantedSpec {
            factors: vec![
                PlantedFactor {
                    ret_mean: 0.001,
                    ret_sd: 0.002,
                },
                PlantedFactor {
                    ret_mean: 0.0,
                    ret_sd: 0.001,
                },
            ],
            noise_sd: 0.0,
            intraday_reversion: 0.0,
        };
        let (panel, truth) = generate_synthetic_panel(6, 25, Some(&spec), 11).unwrap();
        let truth = truth.unwrap();
        let panel = derive_adjusted_open(panel);
        let returns = overnight_returns(&panel).unwrap();
        for i in 0..6 {
            for s in 0..24 {
                let expected: f64 = (0..2)
                    .map(|a| truth.loadings[(i, a)] * truth.factor_returns[(s, a)])
                    .sum();
                let got = returns.get(i, s).unwrap();
                assert!(
                    (got - expected).abs() < 1e-12,
                    "ticker {i} date {s}: {got} vs {expected}"
                );
            }
        }
    }
}
