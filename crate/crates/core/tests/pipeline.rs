//! End-to-end integration over synthetic panels: regressions across the
//! universe schedule, serial statistics, simulations, and the CSV
//! interfaces.

use overnight_core::{
    compare_models, derive_adjusted_open, fama_macbeth, generate_synthetic_panel, load_panel,
    overnight_returns, regress_day, report, run_backtest_regressions, simulate, universe,
    write_panel, FactorSet, LoadingsMatrix, PlantedFactor, PlantedSpec, PricePanel, SectorMap,
    UniverseParams,
};

fn default_params(top_n: usize, rebalance: usize, window: usize) -> UniverseParams {
    UniverseParams {
        top_n,
        rebalance_period: rebalance,
        addv_window: window,
        ..Default::default()
    }
}

/// Generated panel, adjusted-open derived, with returns and schedule.
fn prepared(
    n_tickers: usize,
    n_dates: usize,
    seed: u64,
    params: &UniverseParams,
) -> (
    overnight_core::PricePanel,
    overnight_core::ReturnPanel,
    overnight_core::UniverseSchedule,
) {
    let (panel, _) = generate_synthetic_panel(n_tickers, n_dates, None, seed).unwrap();
    let panel = derive_adjusted_open(panel);
    let returns = overnight_returns(&panel).unwrap();
    let schedule = universe::build_schedule(&panel, params).unwrap();
    (panel, returns, schedule)
}

#[test]
fn two_intervals_produce_42_regression_days() {
    // 64 dates leave 64 - 21 - 2 + 1 = 42 backtest dates: two full
    // 21-day intervals.
    let params = default_params(30, 21, 21);
    let (panel, returns, schedule) = prepared(30, 64, 5, &params);
    assert_eq!(schedule.intervals.len(), 2);

    let set = FactorSet::parse("int,prc,mom,hlv,vol").unwrap();
    let (days, skipped) =
        run_backtest_regressions(&panel, &returns, &schedule, &set, None, 21).unwrap();
    assert_eq!(days.len(), 42);
    assert!(skipped.is_empty());

    // chronological and strictly increasing dates
    for w in days.windows(2) {
        assert!(w[0].date < w[1].date);
    }

    let stats = fama_macbeth(&days).unwrap();
    assert_eq!(stats.dates_used, 42);
    assert_eq!(stats.factor_names, vec!["int", "prc", "mom", "hlv", "vol"]);
}

#[test]
fn all_missing_date_is_skipped_with_reason() {
    let params = default_params(30, 21, 21);
    let (panel, _, _) = prepared(30, 64, 5, &params);

    // Knock out every bar on the most recent date (index 0): that date's
    // overnight returns all disappear, and no other date is affected.
    let n_dates = panel.n_dates();
    let mut bars = Vec::with_capacity(panel.n_tickers() * n_dates);
    for i in 0..panel.n_tickers() {
        for s in 0..n_dates {
            bars.push(if s == 0 {
                None
            } else {
                panel.bar(i, s).copied()
            });
        }
    }
    let mutated =
        PricePanel::from_bars(panel.tickers().to_vec(), panel.dates().to_vec(), bars).unwrap();
    let mutated = derive_adjusted_open(mutated);
    let returns = overnight_returns(&mutated).unwrap();
    let schedule = universe::build_schedule(&mutated, &params).unwrap();

    let set = FactorSet::parse("int,prc,mom,hlv,vol").unwrap();
    let (days, skipped) =
        run_backtest_regressions(&mutated, &returns, &schedule, &set, None, 21).unwrap();
    assert_eq!(days.len(), 41);
    assert_eq!(skipped.len(), 1);
    assert_eq!(skipped[0].date, mutated.date(0));
    assert!(skipped[0].reason.contains("no overnight returns"));
}

/// Regression of panel returns on the *true* planted loadings, one date at
/// a time.
fn recover_on_truth(
    panel: &overnight_core::PricePanel,
    truth: &overnight_core::PlantedTruth,
) -> Vec<overnight_core::RegressionDay> {
    let panel = derive_adjusted_open(panel.clone());
    let returns = overnight_returns(&panel).unwrap();
    let n = panel.n_tickers();
    let k = truth.loadings.ncols();
    let mut days = Vec::new();
    for s in (0..panel.n_dates() - 1).rev() {
        let loadings = LoadingsMatrix {
            date: panel.date(s),
            tickers: (0..n).collect(),
            columns: (0..k).map(|a| format!("b{a}")).collect(),
            values: truth.loadings.clone(),
        };
        let r: Vec<f64> = (0..n).map(|i| returns.get(i, s).unwrap()).collect();
        days.push(regress_day(&r, &loadings).unwrap());
    }
    days
}

#[test]
fn zero_noise_planted_recovery_is_exact() {
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
            PlantedFactor {
                ret_mean: -0.0005,
                ret_sd: 0.0015,
            },
        ],
        noise_sd: 0.0,
        intraday_reversion: 0.0,
    };
    let (panel, truth) = generate_synthetic_panel(30, 28, Some(&spec), 17).unwrap();
    let truth = truth.unwrap();
    let days = recover_on_truth(&panel, &truth);
    for day in &days {
        let s = (0..28).find(|&s| panel.date(s) == day.date).unwrap();
        for a in 0..3 {
            let diff = (day.factor_returns[a] - truth.factor_returns[(s, a)]).abs();
            assert!(diff < 1e-12, "date {s} factor {a}: diff {diff}");
        }
    }
}

#[test]
fn noisy_planted_recovery_stays_within_standard_error_bound() {
    // noise 0.01 over N=100 tickers: the per-date standard error of each
    // recovered factor return is ~ sigma / sqrt(N); nearly all estimates
    // land within three of them.
    let sigma = 0.01;
    let n = 100;
    let spec = PlantedSpec::five_factor_default(sigma);
    let (panel, truth) = generate_synthetic_panel(n, 54, Some(&spec), 23).unwrap();
    let truth = truth.unwrap();
    let days = recover_on_truth(&panel, &truth);
    assert_eq!(days.len(), 53);

    let bound = 3.0 * sigma / (n as f64).sqrt();
    let mut total = 0usize;
    let mut within = 0usize;
    for day in &days {
        let s = (0..54).find(|&s| panel.date(s) == day.date).unwrap();
        for a in 0..5 {
            total += 1;
            if (day.factor_returns[a] - truth.factor_returns[(s, a)]).abs() <= bound {
                within += 1;
            }
        }
    }
    let frac = within as f64 / total as f64;
    assert!(frac >= 0.95, "only {within}/{total} within 3 sigma/sqrt(N)");
}

#[test]
fn alpha_detects_planted_intraday_reversion() {
    // Half of every stock's idiosyncratic overnight move reverts during
    // the session: trading against the residuals must earn strongly
    // positive P&L, while the same book on reversion-free data just
    // collects noise.
    let mut spec = PlantedSpec::five_factor_default(0.01);
    spec.intraday_reversion = 0.5;
    let mut no_rev = spec.clone();
    no_rev.intraday_reversion = 0.0;

    let params = default_params(60, 21, 21);
    let investment = 1e6;
    let mut totals = Vec::new();
    for planted in [&spec, &no_rev] {
        let (panel, _) = generate_synthetic_panel(60, 80, Some(planted), 101).unwrap();
        let panel = derive_adjusted_open(panel);
        let returns = overnight_returns(&panel).unwrap();
        let schedule = universe::build_schedule(&panel, &params).unwrap();
        let results = compare_models(
            &panel,
            &returns,
            &schedule,
            &[
                FactorSet::parse("int").unwrap(),
                FactorSet::parse("int,prc,mom,hlv,vol").unwrap(),
            ],
            None,
            21,
            investment,
            false,
        )
        .unwrap();
        totals.push(
            results
                .iter()
                .map(|(r, _)| r.total_pnl())
                .collect::<Vec<_>>(),
        );
        if std::ptr::eq(planted, &spec) {
            for (report, _) in &results {
                assert!(
                    report.total_pnl() > 0.0,
                    "{}: expected positive pnl, got {}",
                    report.model,
                    report.total_pnl()
                );
                assert!(
                    report.sharpe.unwrap() > 3.0,
                    "{}: sharpe {:?} too weak for a planted edge",
                    report.model,
                    report.sharpe
                );
            }
        }
    }
    // the edge comes from the reversion, not from the book construction
    for (with, without) in totals[0].iter().zip(&totals[1]) {
        assert!(
            *with > 5.0 * without.abs(),
            "reversion pnl {with} vs baseline {without}"
        );
    }
}

#[test]
fn compare_models_structure_and_determinism() {
    let params = default_params(25, 21, 21);
    let (panel, returns, schedule) = prepared(25, 70, 9, &params);
    let specs = vec![
        FactorSet::parse("int").unwrap(),
        FactorSet::parse("int,prc,mom,hlv,vol").unwrap(),
        FactorSet::parse("int").unwrap(), // repeated spec: identical row
    ];
    let results = compare_models(&panel, &returns, &schedule, &specs, None, 21, 2e7, true).unwrap();
    assert_eq!(results.len(), 3);
    let n_dates = results[0].0.dates.len();
    assert!(n_dates > 0);
    for (report, _) in &results {
        assert_eq!(report.cumulative_pnl().len(), report.dates.len());
        assert!(report.total_pnl().abs() > 0.0);
    }
    // identical specs give bit-identical reports
    let a = &results[0].0;
    let b = &results[2].0;
    assert_eq!(a.daily_pnl.len(), b.daily_pnl.len());
    for (x, y) in a.daily_pnl.iter().zip(&b.daily_pnl) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
    assert_eq!(a.roc.to_bits(), b.roc.to_bits());
    assert_eq!(a.cps.to_bits(), b.cps.to_bits());
}

#[test]
fn simulate_reruns_bit_identical() {
    let params = default_params(20, 21, 21);
    let (panel, returns, schedule) = prepared(20, 60, 31, &params);
    let set = FactorSet::parse("int,prc,mom,hlv,vol").unwrap();
    let (a, _) = simulate(&panel, &returns, &schedule, &set, None, 21, 1e6, true).unwrap();
    let (b, _) = simulate(&panel, &returns, &schedule, &set, None, 21, 1e6, true).unwrap();
    for (x, y) in a.daily_pnl.iter().zip(&b.daily_pnl) {
        assert_eq!(x.to_bits(), y.to_bits());
    }
    assert_eq!(a.shares_traded.to_bits(), b.shares_traded.to_bits());
}

#[test]
fn csv_interfaces_have_expected_shape() {
    let params = default_params(20, 21, 21);
    let (panel, returns, schedule) = prepared(20, 60, 13, &params);
    let set = FactorSet::parse("int,prc,mom,hlv,vol").unwrap();
    let (days, _) = run_backtest_regressions(&panel, &returns, &schedule, &set, None, 21).unwrap();
    let n_days = days.len();

    let models = vec![(set.label(), days)];
    let fr = report::factor_returns_csv(&models);
    let mut lines = fr.lines();
    assert_eq!(lines.next().unwrap(), "model,date,int,prc,mom,hlv,vol");
    assert_eq!(fr.lines().count(), 1 + n_days);
    // full-precision round trip of a sample value
    let first_data = fr.lines().nth(1).unwrap();
    let value: f64 = first_data.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(value, models[0].1[0].factor_returns[0]);

    let res = report::residuals_csv(&panel, &models);
    assert!(res.starts_with("model,date,ticker,residual\n"));
    let expected_rows: usize = models[0].1.iter().map(|d| d.tickers.len()).sum();
    assert_eq!(res.lines().count(), 1 + expected_rows);

    let sim_results = compare_models(
        &panel,
        &returns,
        &schedule,
        &[FactorSet::parse("int").unwrap(), set],
        None,
        21,
        2e7,
        false,
    )
    .unwrap();
    let reports: Vec<_> = sim_results.into_iter().map(|(r, _)| r).collect();
    let summary = report::sim_summary_csv(&reports);
    assert!(summary.starts_with("Model,ROC,SR,CPS\n"));
    assert_eq!(summary.lines().count(), 3);
    assert!(summary.contains("int only,"));
    assert!(summary.contains('%'));

    let daily = report::pnl_daily_csv(&reports);
    assert!(daily.starts_with("date,int only,int+prc+mom+hlv+vol\n"));
    assert_eq!(daily.lines().count(), 1 + reports[0].dates.len());

    let svg = overnight_core::plot::cumulative_pnl_svg(&reports);
    assert_eq!(svg.matches("<polyline").count(), 2);
}

#[test]
fn flat_intraday_days_give_zero_pnl_and_flagged_sharpe() {
    // Overnight gaps drive nonzero residuals and holdings, but every day
    // closes exactly at its open, so the intraday book earns nothing.
    use chrono::NaiveDate;
    use overnight_core::PriceBar;
    let mk = |o: f64, v: f64| {
        Some(PriceBar {
            open: o,
            high: o * 1.01,
            low: o * 0.99,
            close: o,
            adj_close: o,
            volume: v,
        })
    };
    let d = |day: u32| NaiveDate::from_ymd_opt(2020, 3, day).unwrap();
    let dates = vec![d(9), d(8), d(7), d(6)]; // most recent first
    let bars = vec![
        // ticker A opens: 104.04, 102, 100, 100
        mk(104.04, 100.0),
        mk(102.0, 100.0),
        mk(100.0, 100.0),
        mk(100.0, 500.0),
        // ticker B opens: 48.02, 49, 50, 50
        mk(48.02, 100.0),
        mk(49.0, 100.0),
        mk(50.0, 100.0),
        mk(50.0, 500.0),
    ];
    let panel = derive_adjusted_open(
        PricePanel::from_bars(vec!["A".into(), "B".into()], dates, bars).unwrap(),
    );
    let returns = overnight_returns(&panel).unwrap();
    let params = default_params(2, 2, 1);
    let schedule = universe::build_schedule(&panel, &params).unwrap();
    let set = FactorSet::parse("int").unwrap();
    let (report, _) = simulate(&panel, &returns, &schedule, &set, None, 1, 1e6, false).unwrap();
    assert_eq!(report.dates.len(), 2);
    for pnl in &report.daily_pnl {
        assert_eq!(*pnl, 0.0);
    }
    assert_eq!(report.cps, 0.0);
    assert_eq!(report.roc, 0.0);
    assert!(report.sharpe.is_none(), "zero-sd pnl must be flagged");
}

#[test]
fn synthetic_panel_round_trips_through_files() {
    let (panel, _) = generate_synthetic_panel(8, 30, None, 77).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bars.csv");
    write_panel(&panel, &path).unwrap();
    let reloaded = load_panel(&path, None).unwrap();
    assert_eq!(panel.n_tickers(), reloaded.n_tickers());
    assert_eq!(panel.n_dates(), reloaded.n_dates());
    for i in 0..panel.n_tickers() {
        for s in 0..panel.n_dates() {
            assert_eq!(panel.bar(i, s), reloaded.bar(i, s), "cell ({i},{s})");
        }
    }
}

#[test]
fn sector_pipeline_runs_and_residuals_sum_to_zero() {
    let params = default_params(30, 21, 21);
    let (panel, returns, schedule) = prepared(30, 60, 41, &params);
    let pairs: Vec<(String, u32)> = panel
        .tickers()
        .iter()
        .enumerate()
        .map(|(i, t)| (t.clone(), (i % 5) as u32 + 1))
        .collect();
    let map = SectorMap::from_pairs(pairs).unwrap();
    let set = FactorSet::parse("sectors,prc,mom,hlv,vol").unwrap();
    let (days, _) =
        run_backtest_regressions(&panel, &returns, &schedule, &set, Some(&map), 21).unwrap();
    assert!(!days.is_empty());
    for day in &days {
        assert_eq!(day.k, 9); // 5 sectors + 4 factors
        let sum: f64 = day.residuals.iter().sum();
        let norm: f64 = day
            .residuals
            .iter()
            .map(|r| r * r)
            .sum::<f64>()
            .sqrt()
            .max(1e-30);
        assert!(sum.abs() <= 1e-8 * norm.max(1.0), "residual sum {sum}");
    }
}
