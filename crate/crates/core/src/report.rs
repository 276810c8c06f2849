//! CSV rendering of regression statistics, factor returns, residuals,
//! and simulation summaries. Output is deterministic: fixed column
//! orders, no timestamps, shortest round-trip floats where full
//! precision matters.

use crate::alpha::SimReport;
use crate::market_data::PricePanel;
use crate::xsreg::{RegressionDay, SerialStats};

/// Table shapes mirroring the reference report layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableLayout {
    /// One row per model: `Regression,F-stat,t-stat:...` (for one- and
    /// two-factor models).
    SingleFactor,
    /// One row per model with the F-stat last: `Regression,t-stat:...,F-stat`.
    MultiFactor,
    /// Transposed: one column per model, one row per statistic (sector runs).
    Sector,
}

/// Canonical column order: intercept, the price/momentum/volatility/volume
/// family, then sector columns by sector number.
fn factor_rank(name: &str) -> (u32, u32) {
    match name {
        "int" => (0, 0),
        "prc" => (1, 0),
        "rprc" => (2, 0),
        "mom" => (3, 0),
        "hlv" => (4, 0),
        "hlv1" => (5, 0),
        "hlv2" => (6, 0),
        "vol" => (7, 0),
        "vol1" => (8, 0),
        s => {
            let num = s
                .strip_prefix('S')
                .and_then(|n| n.parse::<u32>().ok())
                .unwrap_or(u32::MAX);
            (100, num)
        }
    }
}

fn union_factors(stats: &[(String, SerialStats)]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for (_, s) in stats {
        for f in &s.factor_names {
            if !names.contains(f) {
                names.push(f.clone());
            }
        }
    }
    names.sort_by_key(|n| factor_rank(n));
    names
}

fn fmt_t(t: Option<Option<f64>>) -> String {
    match t {
        None => "---".to_string(),
        Some(None) => "n/a".to_string(),
        Some(Some(v)) => format!("{v:.2}"),
    }
}

fn fmt_f(f: f64) -> String {
    if f.is_infinite() {
        "inf".to_string()
    } else {
        format!("{f:.1}")
    }
}

/// Renders serial statistics for one or more models as a CSV table in the
/// requested layout. Factors a model does not carry render as `---`;
/// flagged (zero-sd) t-statistics render as `n/a`.
pub fn report_table(stats: &[(String, SerialStats)], layout: TableLayout) -> String {
    let factors = union_factors(stats);
    let mut out = String::new();
    match layout {
        TableLayout::SingleFactor | TableLayout::MultiFactor => {
            let mut header = vec!["Regression".to_string()];
            if layout == TableLayout::SingleFactor {
                header.push("F-stat".into());
            }
            header.extend(factors.iter().map(|f| format!("t-stat:{f}")));
            if layout == TableLayout::MultiFactor {
                header.push("F-stat".into());
            }
            out.push_str(&header.join(","));
            out.push('\n');
            for (model, s) in stats {
                let mut row = vec![model.clone()];
                if layout == TableLayout::SingleFactor {
                    row.push(fmt_f(s.median_f_stat));
                }
                row.extend(factors.iter().map(|f| fmt_t(s.t_stat(f))));
                if layout == TableLayout::MultiFactor {
                    row.push(fmt_f(s.median_f_stat));
                }
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        TableLayout::Sector => {
            let mut header = vec!["Factor/Regression".to_string()];
            header.extend(stats.iter().map(|(m, _)| m.clone()));
            out.push_str(&header.join(","));
            out.push('\n');
            let mut row = vec!["F-stat".to_string()];
            row.extend(stats.iter().map(|(_, s)| fmt_f(s.median_f_stat)));
            out.push_str(&row.join(","));
            out.push('\n');
            for f in &factors {
                let mut row = vec![format!("t-stat:{f}")];
                row.extend(stats.iter().map(|(_, s)| fmt_t(s.t_stat(f))));
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
    }
    out
}

/// Full-precision factor returns, one row per (model, date), columns the
/// union of factor names across models.
pub fn factor_returns_csv(models: &[(String, Vec<RegressionDay>)]) -> String {
    let mut names: Vec<String> = Vec::new();
    for (_, days) in models {
        if let Some(day) = days.first() {
            for f in &day.factor_names {
                if !names.contains(f) {
                    names.push(f.clone());
                }
            }
        }
    }
    names.sort_by_key(|n| factor_rank(n));

    let mut out = String::from("model,date");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for (model, days) in models {
        for day in days {
            out.push_str(model);
            out.push(',');
            out.push_str(&day.date.format("%Y-%m-%d").to_string());
            for n in &names {
                out.push(',');
                if let Some(v) = day.factor_return(n) {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Full-precision residuals: `model,date,ticker,residual`.
pub fn residuals_csv(panel: &PricePanel, models: &[(String, Vec<RegressionDay>)]) -> String {
    let mut out = String::from("model,date,ticker,residual\n");
    for (model, days) in models {
        for day in days {
            for (idx, &i) in day.tickers.iter().enumerate() {
                out.push_str(&format!(
                    "{model},{},{},{}\n",
                    day.date.format("%Y-%m-%d"),
                    panel.ticker(i),
                    day.residuals[idx]
                ));
            }
        }
    }
    out
}

/// Summary table mirroring the simulation result layout:
/// `Model,ROC,SR,CPS` with ROC as an annualized percentage.
pub fn sim_summary_csv(reports: &[SimReport]) -> String {
    let mut out = String::from("Model,ROC,SR,CPS\n");
    for r in reports {
        let sr = match r.sharpe {
            Some(v) => format!("{v:.2}"),
            None => "n/a".to_string(),
        };
        out.push_str(&format!(
            "{},{:.2}%,{sr},{:.2}\n",
            r.model,
            r.roc * 100.0,
            r.cps
        ));
    }
    out
}

/// Full-precision daily P&L, one column per model over the union of
/// usable dates.
pub fn pnl_daily_csv(reports: &[SimReport]) -> String {
    let mut dates: Vec<chrono::NaiveDate> = reports
        .iter()
        .flat_map(|r| r.dates.iter().copied())
        .collect();
    dates.sort_unstable();
    dates.dedup();

    let mut out = String::from("date");
    for r in reports {
        out.push(',');
        out.push_str(&r.model);
    }
    out.push('\n');
    for date in &dates {
        out.push_str(&date.format("%Y-%m-%d").to_string());
        for r in reports {
            out.push(',');
            if let Some(pos) = r.dates.iter().position(|d| d == date) {
                out.push_str(&format!("{}", r.daily_pnl[pos]));
            }
        }
        out.push('\n');
    }
    out
}
