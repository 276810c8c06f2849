use chrono::NaiveDate;
use thiserror::Error;

/// Broad classification of failures, used by callers (notably the CLI) to
/// choose exit codes: configuration mistakes, bad input data, or numerical
/// degeneracy discovered during computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("malformed header in {path}: expected `{expected}`, found `{found}`")]
    MalformedHeader {
        path: String,
        expected: String,
        found: String,
    },
    #[error("duplicate row for ({ticker}, {date})")]
    DuplicateRow { ticker: String, date: NaiveDate },
    #[error("panel holds no rows")]
    EmptyPanel,
    #[error("adjusted open has not been derived for this panel")]
    AdjustedOpenMissing,
    #[error("invalid factor spec: {0}")]
    InvalidFactorSpec(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("factor spec requests sector loadings but no sector map was given")]
    MissingSectorMap,
    #[error("ticker {0} has no sector assignment")]
    UncoveredTicker(String),
    #[error("insufficient history: need {needed} dates, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("empty cross-section on {date}")]
    EmptyCrossSection { date: NaiveDate },
    #[error("loadings are rank deficient: rank {rank} < {cols} columns")]
    RankDeficient { rank: usize, cols: usize },
    #[error("cross-section too small: n={n} must exceed k={k}")]
    TooFewRows { n: usize, k: usize },
    #[error("sample standard deviation is zero")]
    ZeroStdDev,
    #[error("residuals are all zero; holdings undefined")]
    DegenerateResiduals,
    #[error("no usable dates in the backtest range")]
    NoUsableDates,
    #[error("serial statistics need at least two days, got {0}")]
    NotEnoughDays(usize),
    #[error("regression days carry different factor sets")]
    FactorSetMismatch,
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        use Error::*;
        match self {
            InvalidFactorSpec(_) | InvalidParam(_) | MissingSectorMap | AdjustedOpenMissing => {
                ErrorCategory::Config
            }
            Io { .. }
            | Csv { .. }
            | MalformedHeader { .. }
            | DuplicateRow { .. }
            | EmptyPanel
            | UncoveredTicker(_)
            | InsufficientHistory { .. }
            | EmptyCrossSection { .. } => ErrorCategory::Data,
            RankDeficient { .. }
            | TooFewRows { .. }
            | ZeroStdDev
            | DegenerateResiduals
            | NoUsableDates
            | NotEnoughDays(_)
            | FactorSetMismatch => ErrorCategory::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
