//! The four subcommands: stats, sim, synth, universe. Each computes its
//! full result in memory and only then writes the artifacts, so a failed
//! run leaves no partial outputs.

use std::path::Path;

use overnight_core::{
    compare_models, derive_adjusted_open, fama_macbeth, generate_synthetic_panel, load_panel,
    overnight_returns, plot, report, run_backtest_regressions, synth, universe, FactorName,
    FactorSet, PlantedSpec, PricePanel, RegressionDay, ReturnPanel, SectorMap, SerialStats,
    SkippedDate, UniverseParams, UniverseSchedule,
};

use crate::config::RunConfig;
use crate::CliError;

struct Inputs {
    panel: PricePanel,
    returns: ReturnPanel,
    schedule: UniverseSchedule,
    sector_map: Option<SectorMap>,
}

fn prepare(config: &RunConfig) -> Result<Inputs, CliError> {
    let data = config
        .data
        .as_ref()
        .ok_or_else(|| CliError::Usage("config key `data` is required".into()))?;
    let panel = derive_adjusted_open(load_panel(data, None)?);
    let returns = overnight_returns(&panel)?;
    let params = UniverseParams {
        top_n: config.top_n,
        rank_range: config.rank_lo.zip(config.rank_hi),
        rebalance_period: config.rebalance_period,
        addv_window: config.addv_window,
        start: config.start_date,
        end: config.end_date,
    };
    let schedule = universe::build_schedule(&panel, &params)?;
    let sector_map = match &config.sectors_path {
        Some(p) => Some(SectorMap::load(p)?),
        None => None,
    };
    Ok(Inputs {
        panel,
        returns,
        schedule,
        sector_map,
    })
}

fn require_specs(config: &RunConfig) -> Result<(), CliError> {
    if config.factor_specs.is_empty() {
        return Err(CliError::Usage(
            "at least one `factors = ...` line (or --factors flag) is required".into(),
        ));
    }
    if config.factor_specs.iter().any(|s| s.has_sectors()) && config.sectors_path.is_none() {
        return Err(CliError::Usage(
            "a factor spec requests sectors but no `sectors` file is configured".into(),
        ));
    }
    Ok(())
}

/// The recommended pairing keeps price and volume on the same adjustment
/// convention; mixing is allowed but warned about.
fn convention_warnings(specs: &[FactorSet]) -> Vec<String> {
    let mut warnings = Vec::new();
    for spec in specs {
        let has = |n: FactorName| spec.factors().contains(&n);
        if has(FactorName::Prc) && has(FactorName::Vol) {
            warnings.push(format!(
                "model {}: prc uses the adjusted close but vol averages unadjusted volume; \
                 consider vol1",
                spec.label()
            ));
        }
        if has(FactorName::Rprc) && has(FactorName::Vol1) {
            warnings.push(format!(
                "model {}: rprc uses the unadjusted close but vol1 averages adjusted volume; \
                 consider vol",
                spec.label()
            ));
        }
    }
    warnings
}

fn choose_layout(specs: &[FactorSet]) -> report::TableLayout {
    if specs.iter().any(|s| s.has_sectors()) {
        report::TableLayout::Sector
    } else if specs.iter().any(|s| s.factors().len() > 2) {
        report::TableLayout::MultiFactor
    } else {
        report::TableLayout::SingleFactor
    }
}

/// Keeps the days carrying the most common factor-name set (serial
/// statistics need a homogeneous panel; a date can diverge when an empty
/// sector column was dropped).
fn modal_filter(days: Vec<RegressionDay>) -> (Vec<RegressionDay>, Vec<SkippedDate>) {
    let mut sets: Vec<(Vec<String>, usize)> = Vec::new();
    for day in &days {
        match sets
            .iter_mut()
            .find(|(names, _)| names == &day.factor_names)
        {
            Some((_, count)) => *count += 1,
            None => sets.push((day.factor_names.clone(), 1)),
        }
    }
    let modal = sets
        .iter()
        .max_by_key(|(_, count)| *count)
        .map(|(names, _)| names.clone())
        .unwrap_or_default();
    let mut kept = Vec::new();
    let mut excluded = Vec::new();
    for day in days {
        if day.factor_names == modal {
            kept.push(day);
        } else {
            excluded.push(SkippedDate {
                date: day.date,
                reason: format!(
                    "factor set {:?} differs from the modal set",
                    day.factor_names
                ),
            });
        }
    }
    (kept, excluded)
}

struct RunLog {
    lines: Vec<String>,
}

impl RunLog {
    fn new(command: &str, config: &RunConfig) -> Self {
        let mut lines = vec![
            format!("command = {command}"),
            String::new(),
            "config:".into(),
        ];
        for (k, v) in config.echo() {
            lines.push(format!("  {k} = {v}"));
        }
        Self { lines }
    }

    fn section(&mut self, title: &str) {
        self.lines.push(String::new());
        self.lines.push(format!("{title}:"));
    }

    fn item(&mut self, text: impl Into<String>) {
        self.lines.push(format!("  {}", text.into()));
    }

    fn warnings(&mut self, warnings: &[String]) {
        if !warnings.is_empty() {
            self.section("warnings");
            for w in warnings {
                self.item(w.clone());
            }
        }
    }

    fn skipped(&mut self, model: &str, skipped: &[SkippedDate]) {
        if !skipped.is_empty() {
            self.section(&format!("skipped dates ({model})"));
            for s in skipped {
                self.item(format!("{}: {}", s.date, s.reason));
            }
        }
    }

    fn render(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn ensure_output_dir(config: &RunConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&config.output_dir).map_err(|e| CliError::Io {
        path: config.output_dir.display().to_string(),
        source: e,
    })
}

pub fn cmd_stats(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    require_specs(config)?;
    let inputs = prepare(config)?;
    let mut log = RunLog::new("stats", config);

    let mut warnings = convention_warnings(&config.factor_specs);
    warnings.extend(inputs.schedule.warnings.iter().cloned());
    log.warnings(&warnings);
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let mut model_days: Vec<(String, Vec<RegressionDay>)> = Vec::new();
    let mut rows: Vec<(String, SerialStats)> = Vec::new();
    for spec in &config.factor_specs {
        let (days, mut skipped) = run_backtest_regressions(
            &inputs.panel,
            &inputs.returns,
            &inputs.schedule,
            spec,
            inputs.sector_map.as_ref(),
            config.window,
        )?;
        let (days, excluded) = modal_filter(days);
        skipped.extend(excluded);
        let label = spec.label();
        log.skipped(&label, &skipped);
        let stats = fama_macbeth(&days)?;
        log.section(&format!("model {label}"));
        log.item(format!("regression days used: {}", stats.dates_used));
        rows.push((label.clone(), stats));
        model_days.push((label, days));
    }

    let table = report::report_table(&rows, choose_layout(&config.factor_specs));

    ensure_output_dir(config)?;
    write_file(&config.output_dir.join("stats.csv"), &table)?;
    write_file(
        &config.output_dir.join("factor_returns.csv"),
        &report::factor_returns_csv(&model_days),
    )?;
    if config.write_residuals {
        write_file(
            &config.output_dir.join("residuals.csv"),
            &report::residuals_csv(&inputs.panel, &model_days),
        )?;
    }
    write_file(&config.output_dir.join("run.log"), &log.render())?;

    print!("{table}");
    Ok(())
}

pub fn cmd_sim(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    require_specs(config)?;
    let inputs = prepare(config)?;
    let mut log = RunLog::new("sim", config);

    let mut warnings = convention_warnings(&config.factor_specs);
    warnings.extend(inputs.schedule.warnings.iter().cloned());
    log.warnings(&warnings);
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    let results = compare_models(
        &inputs.panel,
        &inputs.returns,
        &inputs.schedule,
        &config.factor_specs,
        inputs.sector_map.as_ref(),
        config.window,
        config.investment,
        config.normalize_residuals,
    )?;
    let mut reports = Vec::with_capacity(results.len());
    for (report, skipped) in results {
        log.skipped(&report.model, &skipped);
        log.section(&format!("model {}", report.model));
        log.item(format!("days simulated: {}", report.dates.len()));
        log.item(format!("total pnl: {:.2}", report.total_pnl()));
        reports.push(report);
    }

    let summary = report::sim_summary_csv(&reports);

    ensure_output_dir(config)?;
    write_file(&config.output_dir.join("sim_summary.csv"), &summary)?;
    write_file(
        &config.output_dir.join("pnl_daily.csv"),
        &report::pnl_daily_csv(&reports),
    )?;
    write_file(
        &config.output_dir.join("pnl_cumulative.svg"),
        &plot::cumulative_pnl_svg(&reports),
    )?;
    write_file(&config.output_dir.join("run.log"), &log.render())?;

    print!("{summary}");
    Ok(())
}

pub fn cmd_universe(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    let inputs = prepare(config)?;
    let mut log = RunLog::new("universe", config);
    log.warnings(&inputs.schedule.warnings);

    let mut csv = String::from("interval,start_date,end_date,ticker\n");
    for (idx, interval) in inputs.schedule.intervals.iter().enumerate() {
        let start = inputs.panel.date(interval.first_index);
        let end = inputs.panel.date(interval.last_index);
        for &i in &interval.tickers {
            csv.push_str(&format!("{idx},{start},{end},{}\n", inputs.panel.ticker(i)));
        }
    }
    log.section("schedule");
    log.item(format!("intervals: {}", inputs.schedule.intervals.len()));

    ensure_output_dir(config)?;
    write_file(&config.output_dir.join("universe.csv"), &csv)?;
    write_file(&config.output_dir.join("run.log"), &log.render())?;

    println!(
        "wrote {} intervals to {}",
        inputs.schedule.intervals.len(),
        config.output_dir.join("universe.csv").display()
    );
    Ok(())
}

pub fn cmd_synth(config: &RunConfig) -> Result<(), CliError> {
    config.validate()?;
    let planted_spec = config
        .planted
        .then(|| PlantedSpec::five_factor_default(0.01));
    let (panel, truth) = generate_synthetic_panel(
        config.n_tickers,
        config.n_dates,
        planted_spec.as_ref(),
        config.seed,
    )?;

    ensure_output_dir(config)?;
    let bars_path = config.output_dir.join("bars.csv");
    overnight_core::write_panel(&panel, &bars_path)?;

    let sectors_path = config.output_dir.join("sectors.csv");
    let mut sectors = String::from("ticker,sector\n");
    for (i, ticker) in panel.tickers().iter().enumerate() {
        sectors.push_str(&format!(
            "{ticker},{}\n",
            i as u32 % config.n_sectors.max(1) + 1
        ));
    }
    write_file(&sectors_path, &sectors)?;
    println!("wrote {}", bars_path.display());
    println!("wrote {}", sectors_path.display());

    if let Some(truth) = truth {
        let truth_path = config.output_dir.join("truth.csv");
        let mut out = String::from("kind,id,factor,value\n");
        for i in 0..panel.n_tickers() {
            for a in 0..truth.loadings.ncols() {
                out.push_str(&format!(
                    "loading,{},{a},{}\n",
                    synth::ticker_symbol(i),
                    truth.loadings[(i, a)]
                ));
            }
        }
        for s in 0..truth.factor_returns.nrows() {
            for a in 0..truth.factor_returns.ncols() {
                out.push_str(&format!(
                    "factor_return,{},{a},{}\n",
                    panel.date(s),
                    truth.factor_returns[(s, a)]
                ));
            }
        }
        write_file(&truth_path, &out)?;
        println!("wrote {}", truth_path.display());
    }
    Ok(())
}
