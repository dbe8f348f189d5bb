//! Report objects and their table, CSV and JSON renderings.
//!
//! Every command builds exactly one report value; all three formats are
//! rendered from it. Fields ending in `_pp` are percentage points at full
//! precision, `probability` is a fraction in `[0, 1]`, and months are
//! `YYYY-MM` strings.

use serde::Serialize;

use recession_core::backtest::{Recession, RecessionMatch};
use recession_core::{Episode, Month, RecessionState};

use crate::config::Format;

pub trait Render: Serialize {
    fn table(&self) -> String;
    fn csv(&self) -> String;

    fn render(&self, format: Format) -> String {
        match format {
            Format::Table => self.table(),
            Format::Csv => self.csv(),
            Format::Json => {
                let mut out = serde_json::to_string_pretty(self).expect("reports serialize");
                out.push('\n');
                out
            }
        }
    }
}

pub fn pp(fraction: f64) -> f64 {
    fraction * 100.0
}

/// Percentage points for configured thresholds, without binary noise such
/// as 0.30000000000000004.
pub fn threshold_pp(fraction: f64) -> f64 {
    (fraction * 1e8).round() / 1e6
}

fn opt<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn dash<T: ToString>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

/// Left-aligned text table.
struct TextTable {
    rows: Vec<Vec<String>>,
}

impl TextTable {
    fn new(header: &[&str]) -> Self {
        TextTable {
            rows: vec![header.iter().map(|s| s.to_string()).collect()],
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn render(&self) -> String {
        let columns = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..columns)
            .map(|c| self.rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &self.rows {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| format!("{cell:<width$}", width = widths[c]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

fn csv_lines(rows: impl IntoIterator<Item = Vec<String>>) -> String {
    rows.into_iter().map(|r| r.join(",") + "\n").collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpanOut {
    pub start: Month,
    pub end: Month,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleReading {
    pub name: String,
    pub low_pp: f64,
    pub high_pp: f64,
    pub state: RecessionState,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalOut {
    pub threshold_pp: f64,
    /// Dated start of the episode in progress, if x is at or above the threshold.
    pub dated_start: Option<Month>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NowcastReport {
    pub command: &'static str,
    pub month: Month,
    pub u_pp: f64,
    pub v_pp: f64,
    pub u_hat_pp: f64,
    pub v_hat_pp: f64,
    pub x_pp: f64,
    /// Classification and probability under the configured rule.
    pub state: RecessionState,
    pub probability: f64,
    pub rules: Vec<RuleReading>,
    pub feru_pp: f64,
    pub gap_pp: f64,
    pub signal: SignalOut,
}

impl Render for NowcastReport {
    fn table(&self) -> String {
        let mut t = TextTable::new(&["month", &self.month.to_string()]);
        let line = |name: &str, value: String| vec![name.to_string(), value];
        t.push(line("unemployment rate", format!("{:.2}%", self.u_pp)));
        t.push(line("vacancy rate", format!("{:.2}%", self.v_pp)));
        t.push(line("u_hat", format!("{:.2}pp", self.u_hat_pp)));
        t.push(line("v_hat", format!("{:.2}pp", self.v_hat_pp)));
        t.push(line("x", format!("{:.2}pp", self.x_pp)));
        for r in &self.rules {
            t.push(line(
                &format!("{} rule {:.2}-{:.2}pp", r.name, r.low_pp, r.high_pp),
                format!("{}, probability {:.1}%", r.state, 100.0 * r.probability),
            ));
        }
        t.push(line("FERU u*", format!("{:.2}%", self.feru_pp)));
        t.push(line("unemployment gap", format!("{:.2}pp", self.gap_pp)));
        t.push(line(
            &format!("signal start (x >= {:.2}pp)", self.signal.threshold_pp),
            dash(self.signal.dated_start),
        ));
        t.render()
    }

    fn csv(&self) -> String {
        let mut header = vec!["month", "u_pp", "v_pp", "u_hat_pp", "v_hat_pp", "x_pp", "state", "probability"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        let mut row = vec![
            self.month.to_string(),
            self.u_pp.to_string(),
            self.v_pp.to_string(),
            self.u_hat_pp.to_string(),
            self.v_hat_pp.to_string(),
            self.x_pp.to_string(),
            self.state.to_string(),
            self.probability.to_string(),
        ];
        for r in &self.rules {
            header.push(format!("probability_{}", r.name));
            row.push(r.probability.to_string());
        }
        header.extend(["feru_pp", "gap_pp", "signal_start"].map(String::from));
        row.extend([self.feru_pp.to_string(), self.gap_pp.to_string(), opt(self.signal.dated_start)]);
        csv_lines([header, row])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecessionOut {
    pub peak: Month,
    pub trough: Month,
    pub official_start: Month,
}

impl From<&Recession> for RecessionOut {
    fn from(r: &Recession) -> Self {
        RecessionOut {
            peak: r.peak,
            trough: r.trough,
            official_start: r.start(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeOut {
    pub first_above: Month,
    pub last_above: Month,
    pub dated_start: Month,
    pub peak_month: Month,
    pub peak_pp: f64,
}

impl From<&Episode> for EpisodeOut {
    fn from(e: &Episode) -> Self {
        EpisodeOut {
            first_above: e.first_above,
            last_above: e.last_above,
            dated_start: e.dated_start,
            peak_month: e.peak_month,
            peak_pp: pp(e.peak_value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionRow {
    pub peak: Month,
    pub trough: Month,
    pub official_start: Month,
    pub detected_start: Option<Month>,
    pub delay: Option<i32>,
}

impl From<&RecessionMatch> for DetectionRow {
    fn from(m: &RecessionMatch) -> Self {
        DetectionRow {
            peak: m.recession.peak,
            trough: m.recession.trough,
            official_start: m.official_start,
            detected_start: m.detected_start,
            delay: m.delay,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleBacktest {
    pub name: &'static str,
    pub indicator: &'static str,
    pub threshold_pp: f64,
    pub rows: Vec<DetectionRow>,
    pub average_delay: Option<f64>,
    pub average_delay_rounded: Option<f64>,
    pub false_positives: Vec<EpisodeOut>,
    pub false_negatives: Vec<RecessionOut>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestOut {
    pub command: &'static str,
    pub span: SpanOut,
    pub early_window: u32,
    pub crossing: &'static str,
    pub rules: Vec<RuleBacktest>,
}

impl Render for BacktestOut {
    fn table(&self) -> String {
        let mut header = vec!["recession start".to_string()];
        for r in &self.rules {
            header.push(format!("{} rule ({:.2}pp)", r.name, r.threshold_pp));
            header.push("delay".into());
        }
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut t = TextTable::new(&header_refs);
        let recessions = self.rules.first().map_or(0, |r| r.rows.len());
        for i in 0..recessions {
            let mut row = vec![self.rules[0].rows[i].official_start.to_string()];
            for r in &self.rules {
                row.push(dash(r.rows[i].detected_start));
                row.push(dash(r.rows[i].delay));
            }
            t.push(row);
        }
        let mut totals = vec!["average delay".to_string()];
        for r in &self.rules {
            totals.push(String::new());
            totals.push(r.average_delay_rounded.map_or("-".into(), |d| format!("{d:.1}")));
        }
        t.push(totals);
        let mut out = format!("Backtest {} to {} (early window {} months)\n", self.span.start, self.span.end, self.early_window);
        out.push_str(&t.render());
        for r in &self.rules {
            let fps: Vec<String> = r
                .false_positives
                .iter()
                .map(|e| format!("{} (peak {:.2}pp)", e.dated_start, e.peak_pp))
                .collect();
            let fns: Vec<String> = r.false_negatives.iter().map(|f| f.official_start.to_string()).collect();
            out.push_str(&format!(
                "{} rule: false positives: {}; false negatives: {}\n",
                r.name,
                if fps.is_empty() { "none".into() } else { fps.join(", ") },
                if fns.is_empty() { "none".into() } else { fns.join(", ") },
            ));
        }
        out
    }

    fn csv(&self) -> String {
        let mut rows = vec![vec![
            "rule".to_string(),
            "threshold_pp".into(),
            "official_start".into(),
            "detected_start".into(),
            "delay".into(),
        ]];
        for r in &self.rules {
            for d in &r.rows {
                rows.push(vec![
                    r.name.into(),
                    r.threshold_pp.to_string(),
                    d.official_start.to_string(),
                    opt(d.detected_start),
                    opt(d.delay),
                ]);
            }
        }
        csv_lines(rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundOut {
    pub threshold_pp: f64,
    pub binding_month: Option<Month>,
    pub binding_value_pp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthValue {
    pub month: Month,
    pub value_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorCalibration {
    pub indicator: &'static str,
    pub low: BoundOut,
    pub high: BoundOut,
    /// True when `low <= high`, so some threshold has neither false positives
    /// nor false negatives.
    pub admissible: bool,
    pub nonrecession_peak: Option<MonthValue>,
    pub weakest_recession: Option<WeakestRecession>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeakestRecession {
    pub official_start: Month,
    pub trough: Month,
    pub month: Month,
    pub value_pp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrateOut {
    pub command: &'static str,
    pub span: SpanOut,
    pub grid_step_pp: f64,
    pub early_window: u32,
    pub indicators: Vec<IndicatorCalibration>,
}

impl Render for CalibrateOut {
    fn table(&self) -> String {
        let mut t = TextTable::new(&["indicator", "bound", "threshold", "binding month", "binding value"]);
        for c in &self.indicators {
            for (name, b) in [("low", &c.low), ("high", &c.high)] {
                t.push(vec![
                    c.indicator.into(),
                    name.into(),
                    format!("{:.2}pp", b.threshold_pp),
                    dash(b.binding_month),
                    b.binding_value_pp.map_or("-".into(), |v| format!("{v:.2}pp")),
                ]);
            }
        }
        let mut out = format!(
            "Calibration {} to {} on a {:.2}pp grid\n",
            self.span.start, self.span.end, self.grid_step_pp
        );
        out.push_str(&t.render());
        for c in &self.indicators {
            out.push_str(&format!(
                "{}: {}\n",
                c.indicator,
                if c.admissible {
                    format!("admissible band {:.2}pp to {:.2}pp", c.low.threshold_pp, c.high.threshold_pp)
                } else {
                    "no admissible threshold (lowest clean threshold exceeds highest detecting threshold)".into()
                }
            ));
            if let Some(p) = &c.nonrecession_peak {
                out.push_str(&format!("  highest value outside recessions: {:.2}pp in {}\n", p.value_pp, p.month));
            }
            if let Some(w) = &c.weakest_recession {
                out.push_str(&format!(
                    "  weakest recession: {} to {}, peak {:.2}pp in {}\n",
                    w.official_start, w.trough, w.value_pp, w.month
                ));
            }
        }
        out
    }

    fn csv(&self) -> String {
        let mut rows = vec![["indicator", "bound", "threshold_pp", "binding_month", "binding_value_pp"]
            .map(String::from)
            .to_vec()];
        for c in &self.indicators {
            for (name, b) in [("low", &c.low), ("high", &c.high)] {
                rows.push(vec![
                    c.indicator.into(),
                    name.into(),
                    b.threshold_pp.to_string(),
                    opt(b.binding_month),
                    opt(b.binding_value_pp),
                ]);
            }
        }
        csv_lines(rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileOut {
    pub path: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilesOut {
    pub command: &'static str,
    pub span: SpanOut,
    pub files: Vec<FileOut>,
}

impl Render for FilesOut {
    fn table(&self) -> String {
        let mut t = TextTable::new(&["file", "rows"]);
        for f in &self.files {
            t.push(vec![f.path.clone(), f.rows.to_string()]);
        }
        format!("{} {} to {}\n{}", self.command, self.span.start, self.span.end, t.render())
    }

    fn csv(&self) -> String {
        csv_lines(
            std::iter::once(vec!["path".to_string(), "rows".into()])
                .chain(self.files.iter().map(|f| vec![f.path.clone(), f.rows.to_string()])),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FetchedOut {
    pub series_id: String,
    pub from_cache: bool,
    pub retrieved: String,
    pub first: Month,
    pub last: Month,
    pub months: usize,
    pub installed: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FetchOut {
    pub command: &'static str,
    pub cache_dir: String,
    pub series: Vec<FetchedOut>,
}

impl Render for FetchOut {
    fn table(&self) -> String {
        let mut t = TextTable::new(&["series", "source", "retrieved", "first", "last", "installed"]);
        for s in &self.series {
            t.push(vec![
                s.series_id.clone(),
                if s.from_cache { "cache" } else { "remote" }.into(),
                s.retrieved.clone(),
                s.first.to_string(),
                s.last.to_string(),
                dash(s.installed.clone()),
            ]);
        }
        t.render()
    }

    fn csv(&self) -> String {
        let mut rows = vec![["series_id", "from_cache", "retrieved", "first", "last", "months", "installed"]
            .map(String::from)
            .to_vec()];
        for s in &self.series {
            rows.push(vec![
                s.series_id.clone(),
                s.from_cache.to_string(),
                s.retrieved.clone(),
                s.first.to_string(),
                s.last.to_string(),
                s.months.to_string(),
                opt(s.installed.clone()),
            ]);
        }
        csv_lines(rows)
    }
}
