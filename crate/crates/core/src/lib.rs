//! Cross-sectional factor model for overnight equity returns.
//!
//! The pipeline runs end to end from daily OHLCV bars: panel ingestion
//! and overnight-return construction ([`market_data`]), factor loadings
//! with rank normalization ([`factors`]), dollar-volume universe
//! scheduling ([`universe`]), per-date regressions with serial
//! statistics ([`xsreg`]), and the intraday dollar-neutral
//! mean-reversion simulation ([`alpha`]). [`synth`] generates
//! deterministic test panels, optionally with a planted factor structure
//! for recovery checks.

pub mod alpha;
pub mod error;
pub mod factors;
pub mod linalg;
pub mod market_data;
pub mod plot;
pub mod report;
pub mod synth;
pub mod universe;
pub mod xsreg;

pub use alpha::{compare_models, compute_holdings, simulate, HoldingsDay, SimReport};
pub use error::{Error, ErrorCategory, Result};
pub use factors::{
    assemble_loadings, normalize_gaussian, FactorName, FactorSet, LoadingsMatrix, SectorMap,
};
pub use market_data::{
    derive_adjusted_open, load_panel, overnight_returns, write_panel, PriceBar, PricePanel,
    ReturnPanel,
};
pub use synth::{generate_synthetic_panel, PlantedFactor, PlantedSpec, PlantedTruth};
pub use universe::{addv, build_schedule, UniverseInterval, UniverseParams, UniverseSchedule};
pub use xsreg::{
    fama_macbeth, regress_day, run_backtest_regressions, RegressionDay, SerialStats, SkippedDate,
};
