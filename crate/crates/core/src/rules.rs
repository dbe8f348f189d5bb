//! Threshold rules on an indicator series.
//!
//! A one-sided rule flags a possible recession start whenever the indicator
//! reaches a threshold; the start is dated to whichever of the two months
//! around the crossing sits strictly closer to the threshold. A two-sided rule
//! adds an upper threshold above which a recession is certain and maps the
//! band in between to a probability.
//!
//! The Sahm rule is the one-sided rule applied to the unemployment indicator
//! with [`SAHM_THRESHOLD`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{Month, MonthlySeries};

/// One-sided threshold for the minimum indicator.
pub const MINIMUM_RULE_THRESHOLD: f64 = 0.003;
/// One-sided threshold for the unemployment indicator.
pub const SAHM_THRESHOLD: f64 = 0.005;

/// How a month counts as above the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Crossing {
    /// `x >= threshold`
    #[default]
    AtOrAbove,
    /// `x > threshold`
    StrictlyAbove,
}

impl Crossing {
    pub fn is_above(self, value: f64, threshold: f64) -> bool {
        match self {
            Crossing::AtOrAbove => value >= threshold,
            Crossing::StrictlyAbove => value > threshold,
        }
    }
}

/// A maximal run of consecutive months at or above a threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Episode {
    pub first_above: Month,
    pub last_above: Month,
    pub peak_value: f64,
    pub peak_month: Month,
    pub dated_start: Month,
    /// The run begins at the first defined month, so there was no
    /// predecessor to date against.
    pub left_censored: bool,
}

impl Episode {
    pub fn overlaps(&self, from: Month, to: Month) -> bool {
        self.first_above <= to && from <= self.last_above
    }

    pub fn months(&self) -> i32 {
        self.last_above - self.first_above + 1
    }
}

/// Dates a recession start from the values on either side of an upcrossing.
///
/// Returns the previous month when it is strictly closer to the threshold than
/// the current month; ties go to the current month. Without a previous value
/// the current month is returned.
pub fn date_start(
    prev_value: Option<f64>,
    curr_value: f64,
    curr_month: Month,
    threshold: f64,
) -> Result<Month> {
    date_start_with(prev_value, curr_value, curr_month, threshold, Crossing::AtOrAbove)
}

pub fn date_start_with(
    prev_value: Option<f64>,
    curr_value: f64,
    curr_month: Month,
    threshold: f64,
    crossing: Crossing,
) -> Result<Month> {
    let Some(prev) = prev_value else {
        return Ok(curr_month);
    };
    if crossing.is_above(prev, threshold) || !crossing.is_above(curr_value, threshold) {
        return Err(Error::NoCrossing {
            prev,
            curr: curr_value,
            threshold,
        });
    }
    if threshold - prev < curr_value - threshold {
        Ok(curr_month.pred())
    } else {
        Ok(curr_month)
    }
}

/// Maximal runs of months with `x >= threshold`, in order.
pub fn detect_episodes(x: &MonthlySeries, threshold: f64) -> Result<Vec<Episode>> {
    detect_episodes_with(x, threshold, Crossing::AtOrAbove)
}

pub fn detect_episodes_with(
    x: &MonthlySeries,
    threshold: f64,
    crossing: Crossing,
) -> Result<Vec<Episode>> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidThreshold(format!("threshold must be positive, got {threshold}")));
    }
    let mut episodes = Vec::new();
    let mut current: Option<Episode> = None;
    let mut prev: Option<f64> = None;
    for (month, value) in x.defined() {
        if crossing.is_above(value, threshold) {
            match current.as_mut() {
                Some(ep) => {
                    ep.last_above = month;
                    if value > ep.peak_value {
                        ep.peak_value = value;
                        ep.peak_month = month;
                    }
                }
                None => {
                    current = Some(Episode {
                        first_above: month,
                        last_above: month,
                        peak_value: value,
                        peak_month: month,
                        dated_start: date_start_with(prev, value, month, threshold, crossing)?,
                        left_censored: prev.is_none(),
                    });
                }
            }
        } else if let Some(ep) = current.take() {
            episodes.push(ep);
        }
        prev = Some(value);
    }
    episodes.extend(current);
    Ok(episodes)
}

/// Lower and upper thresholds of a two-sided rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSidedRule {
    low: f64,
    high: f64,
}

impl TwoSidedRule {
    /// Thresholds calibrated on January 1960 to December 2022.
    pub const MODERN: TwoSidedRule = TwoSidedRule {
        low: 0.003,
        high: 0.008,
    };
    /// Upper threshold lowered to avoid a false negative back to 1929.
    pub const HISTORICAL: TwoSidedRule = TwoSidedRule {
        low: 0.003,
        high: 0.006,
    };

    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(0.0 < low && low < high && high.is_finite()) {
            return Err(Error::InvalidThreshold(format!(
                "two-sided rule needs 0 < low < high, got ({low}, {high})"
            )));
        }
        Ok(TwoSidedRule { low, high })
    }

    pub fn low(&self) -> f64 {
        self.low
    }

    pub fn high(&self) -> f64 {
        self.high
    }
}

impl Default for TwoSidedRule {
    fn default() -> Self {
        TwoSidedRule::MODERN
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecessionState {
    Below,
    Possible,
    Certain,
}

impl fmt::Display for RecessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecessionState::Below => "below",
            RecessionState::Possible => "possible",
            RecessionState::Certain => "certain",
        })
    }
}

pub fn classify(x: f64, rule: &TwoSidedRule) -> RecessionState {
    if x < rule.low {
        RecessionState::Below
    } else if x < rule.high {
        RecessionState::Possible
    } else {
        RecessionState::Certain
    }
}

/// Share of the `[low, high]` band covered by `x`, clamped to `[0, 1]`.
pub fn recession_probability(x: f64, rule: &TwoSidedRule) -> f64 {
    ((x - rule.low) / (rule.high - rule.low)).clamp(0.0, 1.0)
}

/// Full-employment rate of unemployment, `sqrt(u * v)`.
pub fn feru(u: f64, v: f64) -> Result<f64> {
    if u < 0.0 || v < 0.0 || u.is_nan() || v.is_nan() {
        return Err(Error::NegativeInput(format!("feru needs u, v >= 0, got ({u}, {v})")));
    }
    Ok((u * v).sqrt())
}

/// `u - sqrt(u * v)`; negative when the labor market is tighter than efficient.
pub fn unemployment_gap(u: f64, v: f64) -> Result<f64> {
    Ok(u - feru(u, v)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Month {
        s.parse().unwrap()
    }

    #[test]
    fn date_start_examples() {
        assert_eq!(date_start(Some(0.0049), 0.0054, m("2024-08"), 0.005).unwrap(), m("2024-07"));
        assert_eq!(date_start(Some(0.0), 0.004, m("2024-04"), 0.003).unwrap(), m("2024-04"));
        // 0.25 and 0.75 are exactly representable, so the distances tie.
        assert_eq!(date_start(Some(0.25), 0.75, m("2000-05"), 0.5).unwrap(), m("2000-05"));
        assert_eq!(date_start(None, 0.01, m("2000-05"), 0.003).unwrap(), m("2000-05"));
    }

    #[test]
    fn date_start_requires_upcrossing() {
        for (prev, curr) in [(0.004, 0.005), (0.001, 0.002), (0.004, 0.001)] {
            let err = date_start(Some(prev), curr, m("2000-01"), 0.003).unwrap_err();
            assert!(err.to_string().starts_with("no crossing"));
        }
        assert!(date_start_with(Some(0.003), 0.004, m("2000-01"), 0.003, Crossing::StrictlyAbove).is_ok());
        assert!(date_start_with(Some(0.002), 0.003, m("2000-01"), 0.003, Crossing::StrictlyAbove).is_err());
    }

    #[test]
    fn episodes_basic() {
        let zero = MonthlySeries::new(m("2000-01"), vec![0.0; 24]);
        assert!(detect_episodes(&zero, 0.003).unwrap().is_empty());

        let one = MonthlySeries::new(m("2000-01"), vec![0.0, 0.003, 0.0]);
        let eps = detect_episodes(&one, 0.003).unwrap();
        assert_eq!(eps.len(), 1);
        assert_eq!(eps[0].first_above, m("2000-02"));
        assert_eq!(eps[0].months(), 1);
        assert!(detect_episodes_with(&one, 0.003, Crossing::StrictlyAbove).unwrap().is_empty());

        assert!(detect_episodes(&zero, 0.0).is_err());
    }

    #[test]
    fn episode_fields() {
        let x = MonthlySeries::from_options(
            m("2000-01"),
            vec![None, Some(0.001), Some(0.0029), Some(0.004), Some(0.006), Some(0.005), Some(0.001), Some(0.0035)],
        )
        .unwrap();
        let eps = detect_episodes(&x, 0.003).unwrap();
        assert_eq!(eps.len(), 2);
        let first = eps[0];
        assert_eq!(first.first_above, m("2000-04"));
        assert_eq!(first.last_above, m("2000-06"));
        assert_eq!(first.peak_month, m("2000-05"));
        assert_eq!(first.peak_value, 0.006);
        // 0.003 - 0.0029 is smaller than 0.004 - 0.003.
        assert_eq!(first.dated_start, m("2000-03"));
        assert!(!first.left_censored);
        assert_eq!(eps[1].first_above, m("2000-08"));
        assert_eq!(eps[1].last_above, m("2000-08"));
    }

    #[test]
    fn left_censored_episode() {
        let x = MonthlySeries::from_options(m("2000-01"), vec![None, Some(0.01), Some(0.0)]).unwrap();
        let eps = detect_episodes(&x, 0.003).unwrap();
        assert!(eps[0].left_censored);
        assert_eq!(eps[0].dated_start, m("2000-02"));
    }

    #[test]
    fn classify_examples() {
        let modern = TwoSidedRule::MODERN;
        assert_eq!(classify(0.0054, &modern), RecessionState::Possible);
        assert_eq!(classify(0.0, &modern), RecessionState::Below);
        assert_eq!(classify(0.0081, &modern), RecessionState::Certain);
        assert_eq!(classify(0.003, &modern), RecessionState::Possible);
        assert_eq!(classify(0.008, &modern), RecessionState::Certain);
    }

    #[test]
    fn probability_examples() {
        let modern = TwoSidedRule::MODERN;
        assert!((recession_probability(0.0054, &modern) - 0.48).abs() < 1e-9);
        assert_eq!(recession_probability(0.003, &modern), 0.0);
        assert_eq!(recession_probability(0.008, &modern), 1.0);
        assert_eq!(recession_probability(0.0, &modern), 0.0);
        assert_eq!(recession_probability(0.02, &modern), 1.0);
        assert!((recession_probability(0.0054, &TwoSidedRule::HISTORICAL) - 0.80).abs() < 1e-9);
    }

    #[test]
    fn rule_validation() {
        assert!(TwoSidedRule::new(0.003, 0.008).is_ok());
        assert!(TwoSidedRule::new(0.008, 0.003).is_err());
        assert!(TwoSidedRule::new(0.0, 0.003).is_err());
        assert!(TwoSidedRule::new(0.003, 0.003).is_err());
    }

    #[test]
    fn feru_examples() {
        let star = feru(0.042, 0.046).unwrap();
        assert!((star - 0.044).abs() < 0.0005);
        let gap = unemployment_gap(0.042, 0.046).unwrap();
        assert!((gap + 0.002).abs() < 0.0005);
        assert!((feru(0.05, 0.05).unwrap() - 0.05).abs() < 1e-15);
        assert!(unemployment_gap(0.05, 0.05).unwrap().abs() < 1e-15);
        assert_eq!(feru(0.0, 0.04).unwrap(), 0.0);
        assert!(feru(-0.01, 0.04).is_err());
    }
}
