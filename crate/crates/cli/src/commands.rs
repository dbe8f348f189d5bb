use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;

use recession_core::backtest::{
    run_backtest, sahm_breakdown_check, AdmissibilityCheck, BacktestConfig, Bound, Grid, RecessionCalendar, Span,
};
use recession_core::ingest::dataset::HISTORICAL_START;
use recession_core::ingest::fetch::{FetchConfig, RemoteFetcher, DEFAULT_BASE_URL, MODERN_SERIES};
use recession_core::ingest::{BuildOptions, Dataset, Scope, SourceFiles};
use recession_core::rules::{classify, detect_episodes_with, feru, recession_probability, unemployment_gap, Crossing};
use recession_core::{IndicatorSet, Month, MonthlySeries, TwoSidedRule};

use crate::config::RunConfig;
use crate::report::*;

pub const MODERN_START: Month = Month::from_ordinal(1960 * 12);

pub struct Loaded {
    pub sources: SourceFiles,
    pub dataset: Dataset,
    pub calendar: RecessionCalendar,
}

fn missing_historical(sources: &SourceFiles) -> String {
    [&sources.historical_unemployment, &sources.historical_help_wanted]
        .iter()
        .filter(|p| !p.exists())
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn read_calendar(path: &Path) -> Result<RecessionCalendar> {
    let text = fs::read_to_string(path).with_context(|| format!("reading recession calendar {}", path.display()))?;
    RecessionCalendar::parse(&text).with_context(|| format!("parsing recession calendar {}", path.display()))
}

/// Builds the widest dataset the data directory supports.
pub fn load(config: &RunConfig) -> Result<Loaded> {
    let sources = SourceFiles::in_dir(&config.data_dir);
    let scope = if sources.has_historical() { Scope::Full } else { Scope::Modern };
    let dataset = Dataset::build(
        &sources,
        BuildOptions {
            scope,
            ..BuildOptions::default()
        },
    )
    .with_context(|| format!("building dataset from {}", config.data_dir.display()))?;
    let calendar = read_calendar(&sources.calendar)?;
    Ok(Loaded {
        sources,
        dataset,
        calendar,
    })
}

impl Loaded {
    /// Requested span, defaulting to the scope's first month and the last
    /// month of data.
    pub fn span(&self, config: &RunConfig) -> Result<Span> {
        let (first, last) = self.dataset.span();
        let default_start = match self.dataset.scope {
            Scope::Full => HISTORICAL_START,
            Scope::Modern => MODERN_START,
        };
        let start = config.start.unwrap_or(default_start.max(first));
        let end = config.end.unwrap_or(last);
        if start < first {
            let missing = missing_historical(&self.sources);
            if missing.is_empty() {
                bail!("span start {start} precedes the available data, which begins {first}");
            }
            bail!("span start {start} precedes the available data, which begins {first}; historical sources are missing: {missing}");
        }
        if end > last {
            bail!("span end {end} is after the last available month {last}");
        }
        Ok(Span::new(start, end)?)
    }

    pub fn indicators(&self) -> Result<IndicatorSet> {
        self.dataset.indicators().context("computing indicators")
    }
}

fn span_out(span: Span) -> SpanOut {
    SpanOut {
        start: span.start,
        end: span.end,
    }
}

fn rule_name(rule: &TwoSidedRule) -> String {
    if *rule == TwoSidedRule::MODERN {
        "modern".into()
    } else {
        "configured".into()
    }
}

pub fn nowcast(config: &RunConfig) -> Result<NowcastReport> {
    let loaded = load(config)?;
    let span = loaded.span(config)?;
    let set = loaded.indicators()?;
    let month = span.end;
    let reading = set.at(month).ok_or_else(|| {
        anyhow!(
            "indicators are undefined at {month}; they start at {} because the first 14 months are warm-up",
            set.start()
        )
    })?;
    let u = loaded.dataset.u.get(month).context("unemployment rate undefined")?;
    let v = loaded.dataset.v.get(month).context("vacancy rate undefined")?;
    let rules: Vec<RuleReading> = [(rule_name(&config.rule), config.rule), ("historical".into(), TwoSidedRule::HISTORICAL)]
        .into_iter()
        .map(|(name, rule)| RuleReading {
            name,
            low_pp: threshold_pp(rule.low()),
            high_pp: threshold_pp(rule.high()),
            state: classify(reading.x, &rule),
            probability: recession_probability(reading.x, &rule),
        })
        .collect();
    let history = set.x.slice(set.start(), month)?;
    let dated_start = detect_episodes_with(&history, config.threshold, config.crossing)?
        .last()
        .filter(|ep| ep.last_above == month)
        .map(|ep| ep.dated_start);
    Ok(NowcastReport {
        command: "nowcast",
        month,
        u_pp: pp(u),
        v_pp: pp(v),
        u_hat_pp: pp(reading.u_hat),
        v_hat_pp: pp(reading.v_hat),
        x_pp: pp(reading.x),
        state: rules[0].state,
        probability: rules[0].probability,
        rules,
        feru_pp: pp(feru(u, v)?),
        gap_pp: pp(unemployment_gap(u, v)?),
        signal: SignalOut {
            threshold_pp: threshold_pp(config.threshold),
            dated_start,
        },
    })
}

fn crossing_name(crossing: Crossing) -> &'static str {
    match crossing {
        Crossing::AtOrAbove => "at_or_above",
        Crossing::StrictlyAbove => "strictly_above",
    }
}

pub fn backtest(config: &RunConfig) -> Result<BacktestOut> {
    let loaded = load(config)?;
    let span = loaded.span(config)?;
    let set = loaded.indicators()?;
    let rules = [
        ("sahm", "u_hat", &set.u_hat, config.sahm_threshold),
        ("minimum", "x", &set.x, config.threshold),
    ]
    .into_iter()
    .map(|(name, indicator, series, threshold)| {
        let report = run_backtest(
            series,
            &loaded.calendar,
            BacktestConfig {
                span,
                threshold,
                crossing: config.crossing,
                early_window: config.early_window,
            },
        )?;
        Ok(RuleBacktest {
            name,
            indicator,
            threshold_pp: threshold_pp(threshold),
            rows: report.rows.iter().map(DetectionRow::from).collect(),
            average_delay: report.average_delay,
            average_delay_rounded: report.delays().mean_rounded(),
            false_positives: report.false_positives.iter().map(EpisodeOut::from).collect(),
            false_negatives: report.false_negatives.iter().map(RecessionOut::from).collect(),
        })
    })
    .collect::<Result<Vec<_>>>()?;
    Ok(BacktestOut {
        command: "backtest",
        span: span_out(span),
        early_window: config.early_window,
        crossing: crossing_name(config.crossing),
        rules,
    })
}

fn bound_out(b: &Bound) -> BoundOut {
    BoundOut {
        threshold_pp: threshold_pp(b.threshold),
        binding_month: b.binding_month,
        binding_value_pp: b.binding_value.map(pp),
    }
}

fn calibration_out(indicator: &'static str, check: AdmissibilityCheck) -> IndicatorCalibration {
    IndicatorCalibration {
        indicator,
        low: bound_out(&check.calibration.low),
        high: bound_out(&check.calibration.high),
        admissible: !check.interval_empty,
        nonrecession_peak: check.nonrecession_peak.map(|(month, v)| MonthValue {
            month,
            value_pp: pp(v),
        }),
        weakest_recession: check.weakest_recession.map(|(r, month, v)| WeakestRecession {
            official_start: r.start(),
            trough: r.trough,
            month,
            value_pp: pp(v),
        }),
    }
}

pub fn calibrate(config: &RunConfig, grid_step_pp: f64) -> Result<CalibrateOut> {
    let loaded = load(config)?;
    let span = loaded.span(config)?;
    let set = loaded.indicators()?;
    let grid = Grid::new(grid_step_pp / 100.0)?;
    let indicators = [("x", &set.x), ("u_hat", &set.u_hat)]
        .into_iter()
        .map(|(name, series)| {
            let check = sahm_breakdown_check(series, &loaded.calendar, span, grid, config.early_window)
                .with_context(|| format!("calibrating {name} on {span}"))?;
            Ok(calibration_out(name, check))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CalibrateOut {
        command: "calibrate",
        span: span_out(span),
        grid_step_pp: threshold_pp(grid.step),
        early_window: config.early_window,
        indicators,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Export {
    /// Rates and their 3-month averages (fractions).
    Data,
    /// u_hat, v_hat and x in percentage points.
    Indicators,
    /// x with state and probability under the configured and historical rules.
    Probability,
}

/// Writes every file to a temporary name first and renames only once all
/// writes succeeded.
fn write_all_atomic(dir: &Path, files: &[(String, String)]) -> Result<Vec<FileOut>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let staged: Vec<(PathBuf, PathBuf)> = files
        .iter()
        .map(|(name, _)| (dir.join(format!(".{name}.tmp")), dir.join(name)))
        .collect();
    let cleanup = |staged: &[(PathBuf, PathBuf)]| {
        for (tmp, _) in staged {
            let _ = fs::remove_file(tmp);
        }
    };
    for ((tmp, _), (_, content)) in staged.iter().zip(files) {
        if let Err(e) = fs::write(tmp, content) {
            cleanup(&staged);
            return Err(e).with_context(|| format!("writing {}", tmp.display()));
        }
    }
    for (tmp, path) in &staged {
        fs::rename(tmp, path).with_context(|| format!("renaming {} to {}", tmp.display(), path.display()))?;
    }
    Ok(staged
        .iter()
        .zip(files)
        .map(|((_, path), (_, content))| FileOut {
            path: path.display().to_string(),
            rows: content.lines().count().saturating_sub(1),
        })
        .collect())
}

fn cell(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn months(span: Span) -> impl Iterator<Item = Month> {
    (0..=span.end - span.start).map(move |k| span.start + k)
}

fn defined_in(series: &MonthlySeries, span: Span) -> impl Iterator<Item = (Month, f64)> + '_ {
    months(span).filter_map(move |m| series.get(m).map(|v| (m, v)))
}

pub fn export(config: &RunConfig, which: &[Export], out: &Path) -> Result<FilesOut> {
    if which.is_empty() {
        bail!("nothing to export; choose one or more of: data, indicators, probability");
    }
    let loaded = load(config)?;
    let span = loaded.span(config)?;
    let set = loaded.indicators()?;
    let mut which = which.to_vec();
    which.sort();
    which.dedup();
    let mut files = Vec::new();
    for w in which {
        let content = match w {
            Export::Data => loaded.dataset.to_csv_between(span.start, span.end),
            Export::Indicators => {
                let mut s = String::from("month,u_hat_pp,v_hat_pp,x_pp\n");
                for (m, x) in defined_in(&set.x, span) {
                    s.push_str(&format!(
                        "{m},{},{},{}\n",
                        cell(set.u_hat.get(m).map(pp)),
                        cell(set.v_hat.get(m).map(pp)),
                        pp(x)
                    ));
                }
                s
            }
            Export::Probability => {
                let mut s = String::from("month,x_pp,state,probability,probability_historical\n");
                for (m, x) in defined_in(&set.x, span) {
                    s.push_str(&format!(
                        "{m},{},{},{},{}\n",
                        pp(x),
                        classify(x, &config.rule),
                        recession_probability(x, &config.rule),
                        recession_probability(x, &TwoSidedRule::HISTORICAL)
                    ));
                }
                s
            }
        };
        let name = match w {
            Export::Data => "data.csv",
            Export::Indicators => "indicators.csv",
            Export::Probability => "probability.csv",
        };
        files.push((name.to_string(), content));
    }
    let mut shading = String::from("start,end\n");
    for (start, end) in loaded.calendar.intervals() {
        if start <= span.end && end >= span.start {
            shading.push_str(&format!("{start},{end}\n"));
        }
    }
    files.push(("recessions.csv".into(), shading));
    Ok(FilesOut {
        command: "export",
        span: span_out(span),
        files: write_all_atomic(out, &files)?,
    })
}

pub fn build_data(config: &RunConfig, modern_only: bool, metlife_anchor: Option<Month>, out: &Path) -> Result<FilesOut> {
    let sources = SourceFiles::in_dir(&config.data_dir);
    let scope = if modern_only { Scope::Modern } else { Scope::Full };
    let mut options = BuildOptions {
        scope,
        ..BuildOptions::default()
    };
    if let Some(anchor) = metlife_anchor {
        options.metlife_anchor = anchor;
    }
    let dataset = Dataset::build(&sources, options).map_err(|e| {
        let hint = if scope == Scope::Full {
            "; pass --modern-only to build the 1960 onward dataset from the modern sources alone"
        } else {
            ""
        };
        anyhow!("building dataset from {}: {e}{hint}", config.data_dir.display())
    })?;
    let loaded = Loaded {
        calendar: read_calendar(&sources.calendar)?,
        sources,
        dataset,
    };
    let span = loaded.span(config)?;
    let manifest = serde_json::json!({
        "scope": match scope { Scope::Full => "full", Scope::Modern => "modern" },
        "span": span_out(span),
        "columns": ["month", "u", "v", "u_bar", "v_bar"],
        "units": "fractions of the labor force",
        "sources": loaded.dataset.manifest,
    });
    let files = [
        ("dataset.csv".to_string(), loaded.dataset.to_csv_between(span.start, span.end)),
        (
            "manifest.json".to_string(),
            serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n",
        ),
    ];
    Ok(FilesOut {
        command: "build-data",
        span: span_out(span),
        files: write_all_atomic(out, &files)?,
    })
}

fn install_name(series_id: &str) -> Option<&'static str> {
    match series_id {
        "UNEMPLOY" => Some("unemploy.csv"),
        "CLF16OV" => Some("clf16ov.csv"),
        "JTSJOL" => Some("jtsjol.csv"),
        _ => None,
    }
}

pub fn fetch(config: &RunConfig, series: &[String], install: bool) -> Result<FetchOut> {
    let ids: Vec<String> = if series.is_empty() {
        MODERN_SERIES.iter().map(|s| s.to_string()).collect()
    } else {
        series.to_vec()
    };
    if install {
        if let Some(id) = ids.iter().find(|id| install_name(id).is_none()) {
            bail!("{id} has no bundled data file; --install supports UNEMPLOY, CLF16OV and JTSJOL");
        }
    }
    let cache_dir = config.cache_dir.clone().unwrap_or_else(|| config.data_dir.join("cache"));
    let fetcher = RemoteFetcher::new(FetchConfig {
        base_url: config.base_url.clone().unwrap_or_else(|| DEFAULT_BASE_URL.to_string()),
        api_key: config.api_key.clone(),
        offline: config.offline,
        ..FetchConfig::new(&cache_dir)
    });
    let results: Vec<_> = std::thread::scope(|scope| {
        let handles: Vec<_> = ids.iter().map(|id| scope.spawn(|| fetcher.fetch(id))).collect();
        handles.into_iter().map(|h| h.join().expect("fetch thread")).collect()
    });
    let mut tables = Vec::new();
    for (id, result) in ids.iter().zip(results) {
        let table = result.with_context(|| format!("fetching {id}"))?;
        let parsed = table.series()?;
        let (first, last) = parsed.defined_range().ok_or_else(|| anyhow!("{id}: no observations"))?;
        tables.push((table, first, last, parsed.defined_len()));
    }
    let mut installed = Vec::new();
    if install {
        let files: Vec<(String, String)> = tables
            .iter()
            .map(|(t, ..)| (install_name(&t.series_id).unwrap().to_string(), t.content.clone()))
            .collect();
        installed = write_all_atomic(&config.data_dir, &files)?;
    }
    Ok(FetchOut {
        command: "fetch",
        cache_dir: cache_dir.display().to_string(),
        series: tables
            .into_iter()
            .enumerate()
            .map(|(i, (t, first, last, months))| FetchedOut {
                series_id: t.series_id,
                from_cache: t.from_cache,
                retrieved: t.retrieved,
                first,
                last,
                months,
                installed: installed.get(i).map(|f| f.path.clone()),
            })
            .collect(),
    })
}
