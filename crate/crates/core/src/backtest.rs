//! Scoring threshold rules against the official recession calendar.
//!
//! Episodes detected by a rule are matched to recessions, turned into
//! detection delays, and used to calibrate thresholds on a grid: the lowest
//! threshold without false positives and the highest threshold every
//! recession still reaches.

use std::fmt;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rules::{detect_episodes_with, Crossing, Episode};
use crate::timeseries::{Month, MonthlySeries};

/// First month of a recession: the month after the business-cycle peak.
pub fn official_start(peak: Month) -> Month {
    peak.succ()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Recession {
    pub peak: Month,
    pub trough: Month,
}

impl Recession {
    pub fn start(&self) -> Month {
        official_start(self.peak)
    }

    /// Last month of the recession (the trough month).
    pub fn end(&self) -> Month {
        self.trough
    }

    pub fn contains(&self, month: Month) -> bool {
        self.start() <= month && month <= self.trough
    }
}

impl fmt::Display for Recession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start(), self.trough)
    }
}

/// Closed month interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: Month,
    pub end: Month,
}

impl Span {
    pub fn new(start: Month, end: Month) -> Result<Self> {
        if start > end {
            return Err(Error::Config(format!("span start {start} is after end {end}")));
        }
        Ok(Span { start, end })
    }

    pub fn contains(&self, month: Month) -> bool {
        self.start <= month && month <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// Ordered, non-overlapping peak/trough pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecessionCalendar {
    recessions: Vec<Recession>,
}

impl RecessionCalendar {
    pub fn new(recessions: Vec<Recession>) -> Result<Self> {
        for r in &recessions {
            if r.trough < r.peak {
                return Err(Error::InvalidCalendar(format!(
                    "trough {} precedes peak {}",
                    r.trough, r.peak
                )));
            }
        }
        for pair in recessions.windows(2) {
            if pair[1].peak < pair[0].trough {
                return Err(Error::InvalidCalendar(format!(
                    "recessions {} and {} overlap or are out of order",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(RecessionCalendar { recessions })
    }

    /// Parses lines of the form `peak=YYYY-MM,trough=YYYY-MM`. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn parse(content: &str) -> Result<Self> {
        let mut recessions = Vec::new();
        for (i, line) in content.lines().enumerate() {
            let row = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Parse { row, message };
            let mut peak = None;
            let mut trough = None;
            for field in line.split(',') {
                let (key, value) = field
                    .split_once('=')
                    .ok_or_else(|| bad(format!("expected key=value, got {field:?}")))?;
                let month: Month = value.trim().parse().map_err(|e: Error| bad(e.to_string()))?;
                match key.trim() {
                    "peak" => peak = Some(month),
                    "trough" => trough = Some(month),
                    other => return Err(bad(format!("unknown field {other:?}"))),
                }
            }
            match (peak, trough) {
                (Some(peak), Some(trough)) => recessions.push(Recession { peak, trough }),
                _ => return Err(bad("expected both peak and trough".into())),
            }
        }
        RecessionCalendar::new(recessions)
    }

    pub fn recessions(&self) -> &[Recession] {
        &self.recessions
    }

    pub fn len(&self) -> usize {
        self.recessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.recessions.is_empty()
    }

    /// Recessions whose official start falls inside `span`.
    pub fn within(&self, span: Span) -> RecessionCalendar {
        RecessionCalendar {
            recessions: self
                .recessions
                .iter()
                .filter(|r| span.contains(r.start()))
                .copied()
                .collect(),
        }
    }

    pub fn in_recession(&self, month: Month) -> bool {
        self.recessions.iter().any(|r| r.contains(month))
    }

    /// `[start, end]` intervals for shading.
    pub fn intervals(&self) -> Vec<(Month, Month)> {
        self.recessions.iter().map(|r| (r.start(), r.end())).collect()
    }
}

/// One calendar recession and the episode that detected it, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RecessionMatch {
    pub recession: Recession,
    pub official_start: Month,
    pub episode: Option<Episode>,
    pub detected_start: Option<Month>,
    /// `detected_start - official_start` in months; negative when early.
    pub delay: Option<i32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchOutcome {
    pub rows: Vec<RecessionMatch>,
    pub false_positives: Vec<Episode>,
}

impl MatchOutcome {
    pub fn matched(&self) -> impl Iterator<Item = &RecessionMatch> {
        self.rows.iter().filter(|r| r.episode.is_some())
    }

    pub fn false_negatives(&self) -> Vec<Recession> {
        self.rows
            .iter()
            .filter(|r| r.episode.is_none())
            .map(|r| r.recession)
            .collect()
    }
}

fn episode_matches(ep: &Episode, r: &Recession, early_window: u32) -> bool {
    let window_start = r.start() - early_window as i32;
    (window_start <= ep.dated_start && ep.dated_start <= r.trough) || ep.overlaps(r.start(), r.trough)
}

/// Assigns each recession the earliest unclaimed episode that matches it.
///
/// An episode matches when its dated start lies between `early_window` months
/// before the official start and the trough, or when it overlaps the
/// recession. Episodes that match nothing are false positives; a detection
/// that only begins after the trough is therefore a false positive.
pub fn match_episodes(
    episodes: &[Episode],
    calendar: &RecessionCalendar,
    early_window: u32,
) -> MatchOutcome {
    let mut claimed = vec![false; episodes.len()];
    let rows = calendar
        .recessions()
        .iter()
        .map(|r| {
            let hit = episodes
                .iter()
                .enumerate()
                .find(|(i, ep)| !claimed[*i] && episode_matches(ep, r, early_window));
            let episode = hit.map(|(i, ep)| {
                claimed[i] = true;
                *ep
            });
            let detected_start = episode.map(|ep| ep.dated_start);
            RecessionMatch {
                recession: *r,
                official_start: r.start(),
                episode,
                detected_start,
                delay: detected_start.map(|d| d - r.start()),
            }
        })
        .collect();
    let false_positives = episodes
        .iter()
        .zip(&claimed)
        .filter(|(_, &c)| !c)
        .map(|(ep, _)| *ep)
        .collect();
    MatchOutcome {
        rows,
        false_positives,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelaySummary {
    pub delays: Vec<(Recession, i32)>,
    pub mean: Option<f64>,
}

impl DelaySummary {
    /// Mean delay rounded to one decimal, as reported in delay tables.
    pub fn mean_rounded(&self) -> Option<f64> {
        self.mean.map(round_to_tenth)
    }
}

pub fn round_to_tenth(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

pub fn detection_delays(outcome: &MatchOutcome) -> DelaySummary {
    let delays: Vec<(Recession, i32)> = outcome
        .rows
        .iter()
        .filter_map(|r| r.delay.map(|d| (r.recession, d)))
        .collect();
    let mean = (!delays.is_empty())
        .then(|| delays.iter().map(|(_, d)| *d as f64).sum::<f64>() / delays.len() as f64);
    DelaySummary { delays, mean }
}

/// Parameters of a one-sided rule evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BacktestConfig {
    pub span: Span,
    pub threshold: f64,
    pub crossing: Crossing,
    pub early_window: u32,
}

impl BacktestConfig {
    pub const DEFAULT_EARLY_WINDOW: u32 = 3;

    pub fn new(span: Span, threshold: f64) -> Self {
        BacktestConfig {
            span,
            threshold,
            crossing: Crossing::AtOrAbove,
            early_window: Self::DEFAULT_EARLY_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BacktestReport {
    pub config: BacktestConfig,
    pub episodes: Vec<Episode>,
    pub rows: Vec<RecessionMatch>,
    pub false_positives: Vec<Episode>,
    pub false_negatives: Vec<Recession>,
    pub average_delay: Option<f64>,
    pub calibration: Option<Calibration>,
}

impl BacktestReport {
    pub fn outcome(&self) -> MatchOutcome {
        MatchOutcome {
            rows: self.rows.clone(),
            false_positives: self.false_positives.clone(),
        }
    }

    pub fn delays(&self) -> DelaySummary {
        detection_delays(&self.outcome())
    }

    pub fn is_perfect(&self) -> bool {
        self.false_positives.is_empty() && self.false_negatives.is_empty()
    }
}

/// Episodes of `x` whose first month above the threshold lies in `span`.
/// Detection runs over the whole series so the month before the span can
/// still date a crossing at its first month.
pub fn episodes_in_span(x: &MonthlySeries, threshold: f64, crossing: Crossing, span: Span) -> Result<Vec<Episode>> {
    Ok(detect_episodes_with(x, threshold, crossing)?
        .into_iter()
        .filter(|ep| span.contains(ep.first_above))
        .collect())
}

pub fn run_backtest(
    x: &MonthlySeries,
    calendar: &RecessionCalendar,
    config: BacktestConfig,
) -> Result<BacktestReport> {
    let episodes = episodes_in_span(x, config.threshold, config.crossing, config.span)?;
    let calendar = calendar.within(config.span);
    let outcome = match_episodes(&episodes, &calendar, config.early_window);
    let average_delay = detection_delays(&outcome).mean;
    Ok(BacktestReport {
        config,
        false_negatives: outcome.false_negatives(),
        rows: outcome.rows,
        false_positives: outcome.false_positives,
        episodes,
        average_delay,
        calibration: None,
    })
}

/// Threshold grid `k * step`, `k >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub step: f64,
}

impl Grid {
    /// 0.1 percentage point.
    pub const TENTH_PP: Grid = Grid { step: 0.001 };
    /// 0.01 percentage point.
    pub const HUNDREDTH_PP: Grid = Grid { step: 0.0001 };

    pub fn new(step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidThreshold(format!("grid step must be positive, got {step}")));
        }
        Ok(Grid { step })
    }

    /// `k * step`, computed as `k / (1 / step)` when the inverse step is an
    /// integer so that e.g. `3 * 0.001` yields exactly `0.003`.
    pub fn value(&self, k: u32) -> f64 {
        let inverse = 1.0 / self.step;
        if (inverse - inverse.round()).abs() < 1e-9 {
            k as f64 / inverse.round()
        } else {
            k as f64 * self.step
        }
    }

    /// Largest grid point not above `x` (0 when `x < step`).
    pub fn floor_index(&self, x: f64) -> u32 {
        let mut k = (x / self.step).floor().max(0.0) as u32;
        while self.value(k + 1) <= x {
            k += 1;
        }
        while k > 0 && self.value(k) > x {
            k -= 1;
        }
        k
    }
}

/// A calibrated threshold and the observation that pins it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub threshold: f64,
    pub binding_month: Option<Month>,
    pub binding_value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub grid_step: f64,
    pub low: Bound,
    pub high: Bound,
}

impl Calibration {
    pub fn is_admissible(&self) -> bool {
        self.low.threshold <= self.high.threshold
    }
}

fn false_positives_at(
    x: &MonthlySeries,
    calendar: &RecessionCalendar,
    span: Span,
    threshold: f64,
    early_window: u32,
) -> Result<Vec<Episode>> {
    let episodes = episodes_in_span(x, threshold, Crossing::AtOrAbove, span)?;
    Ok(match_episodes(&episodes, &calendar.within(span), early_window).false_positives)
}

/// Smallest grid threshold with no false positives on `span`.
///
/// The binding value is the highest false-positive peak at the grid point
/// just below the result.
pub fn calibrate_low(
    x: &MonthlySeries,
    calendar: &RecessionCalendar,
    span: Span,
    grid: Grid,
    early_window: u32,
) -> Result<Bound> {
    let in_span = x.slice(span.start, span.end)?;
    let max = in_span
        .defined()
        .map(|(_, v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::NoAdmissibleThreshold(format!("no defined values in {span}")));
    }
    // Above the span maximum nothing can fire, so the scan always terminates.
    let last = grid.floor_index(max) + 1;
    let counts: Vec<(u32, usize)> = (1..=last)
        .into_par_iter()
        .map(|k| {
            false_positives_at(x, calendar, span, grid.value(k), early_window).map(|fp| (k, fp.len()))
        })
        .collect::<Result<_>>()?;
    let k = counts.iter().find(|(_, n)| *n == 0).map(|(k, _)| *k).ok_or_else(|| {
        Error::NoAdmissibleThreshold(format!("grid threshold {} still has false positives", grid.value(last)))
    })?;
    let binding = if k > 1 {
        false_positives_at(x, calendar, span, grid.value(k - 1), early_window)?
            .into_iter()
            .max_by(|a, b| a.peak_value.total_cmp(&b.peak_value))
    } else {
        None
    };
    Ok(Bound {
        threshold: grid.value(k),
        binding_month: binding.map(|ep| ep.peak_month),
        binding_value: binding.map(|ep| ep.peak_value),
    })
}

/// Largest value of `x` during the recession, with its month.
pub fn recession_peak(x: &MonthlySeries, recession: &Recession) -> Option<(Month, f64)> {
    x.defined()
        .filter(|(m, _)| recession.contains(*m))
        .fold(None, |best: Option<(Month, f64)>, (m, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((m, v)),
        })
}

/// Largest grid threshold reached by every recession in `span`.
pub fn calibrate_high(
    x: &MonthlySeries,
    calendar: &RecessionCalendar,
    span: Span,
    grid: Grid,
) -> Result<Bound> {
    let calendar = calendar.within(span);
    let mut binding: Option<(Month, f64)> = None;
    for r in calendar.recessions() {
        let peak = recession_peak(x, r).ok_or_else(|| {
            Error::NoAdmissibleThreshold(format!("indicator undefined throughout recession {r}"))
        })?;
        if binding.is_none_or(|(_, b)| peak.1 < b) {
            binding = Some(peak);
        }
    }
    let Some((month, value)) = binding else {
        return Err(Error::NoAdmissibleThreshold(format!("no recessions start in {span}")));
    };
    Ok(Bound {
        threshold: grid.value(grid.floor_index(value)),
        binding_month: Some(month),
        binding_value: Some(value),
    })
}

pub fn calibrate(
    x: &MonthlySeries,
    calendar: &RecessionCalendar,
    span: Span,
    grid: Grid,
    early_window: u32,
) -> Result<Calibration> {
    Ok(Calibration {
        grid_step: grid.step,
        low: calibrate_low(x, calendar, span, grid, early_window)?,
        high: calibrate_high(x, calendar, span, grid)?,
    })
}

/// Whether any one-sided threshold on an indicator separates recessions from
/// non-recessions over a span.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityCheck {
    pub span: Span,
    pub calibration: Calibration,
    /// True when the lowest false-positive-free threshold exceeds the highest
    /// false-negative-free one.
    pub interval_empty: bool,
    /// Highest value outside recession months.
    pub nonrecession_peak: Option<(Month, f64)>,
    /// Recession whose in-recession peak is lowest, with that peak.
    pub weakest_recession: Option<(Recession, Month, f64)>,
}

/// Grid scan showing whether the unemployment indicator admits any threshold
/// with neither false positives nor false negatives on `span`.
pub fn sahm_breakdown_check(
    u_hat: &MonthlySeries,
    calendar: &RecessionCalendar,
    span: Span,
    grid: Grid,
    early_window: u32,
) -> Result<AdmissibilityCheck> {
    let calibration = calibrate(u_hat, calendar, span, grid, early_window)?;
    let in_span = calendar.within(span);
    let nonrecession_peak = u_hat
        .defined()
        .filter(|(m, _)| span.contains(*m) && !calendar.in_recession(*m))
        .fold(None, |best: Option<(Month, f64)>, (m, v)| match best {
            Some((_, b)) if b >= v => best,
            _ => Some((m, v)),
        });
    let weakest_recession = in_span
        .recessions()
        .iter()
        .filter_map(|r| recession_peak(u_hat, r).map(|(m, v)| (*r, m, v)))
        .min_by(|a, b| a.2.total_cmp(&b.2));
    Ok(AdmissibilityCheck {
        span,
        interval_empty: !calibration.is_admissible(),
        calibration,
        nonrecession_peak,
        weakest_recession,
    })
}
