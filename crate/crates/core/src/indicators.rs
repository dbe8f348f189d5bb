//! Unemployment, vacancy, and minimum indicators.
//!
//! Both rate series are smoothed with a 3-month trailing average. The
//! unemployment indicator is the gap between the smoothed rate and its minimum
//! over the current and previous 12 months; the vacancy indicator is the gap
//! between the 12-month maximum of the smoothed rate and its current value.
//! Both are nonnegative by construction, and their pointwise minimum is the
//! recession signal.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::timeseries::{align, rolling_max, rolling_min, trailing_average, Month, MonthlySeries};

pub const SMOOTHING_WINDOW: usize = 3;
pub const EXTREMUM_LOOKBACK: usize = 12;
/// Months of data needed before the first defined indicator value.
pub const MIN_HISTORY: usize = SMOOTHING_WINDOW + EXTREMUM_LOOKBACK;

fn check_history(s: &MonthlySeries) -> Result<()> {
    let got = s.defined_len();
    if got < MIN_HISTORY {
        return Err(Error::InsufficientHistory {
            needed: MIN_HISTORY,
            got,
        });
    }
    Ok(())
}

/// Sahm-type indicator: smoothed unemployment rate minus its trailing minimum.
pub fn unemployment_indicator(u: &MonthlySeries) -> Result<MonthlySeries> {
    check_history(u)?;
    let smoothed = trailing_average(u, SMOOTHING_WINDOW)?;
    let trough = rolling_min(&smoothed, EXTREMUM_LOOKBACK)?;
    smoothed.zip_with(&trough, |level, low| level - low)
}

/// Trailing maximum of the smoothed vacancy rate minus its current value.
pub fn vacancy_indicator(v: &MonthlySeries) -> Result<MonthlySeries> {
    check_history(v)?;
    let smoothed = trailing_average(v, SMOOTHING_WINDOW)?;
    let peak = rolling_max(&smoothed, EXTREMUM_LOOKBACK)?;
    peak.zip_with(&smoothed, |high, level| high - level)
}

/// Pointwise minimum of two indicators covering the same months.
pub fn minimum_indicator(u_hat: &MonthlySeries, v_hat: &MonthlySeries) -> Result<MonthlySeries> {
    u_hat.zip_with(v_hat, f64::min)
}

/// The three indicators over a common, fully defined month range.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorSet {
    pub u_hat: MonthlySeries,
    pub v_hat: MonthlySeries,
    pub x: MonthlySeries,
    pub source: SourceSpan,
}

/// Months covered by the rate series the indicators were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub unemployment: (Month, Month),
    pub vacancy: (Month, Month),
}

impl IndicatorSet {
    /// Computes each indicator over its own rate series, then restricts all
    /// three to the months where both are defined.
    pub fn from_rates(u: &MonthlySeries, v: &MonthlySeries) -> Result<Self> {
        let span = |s: &MonthlySeries| s.defined_range().ok_or(Error::EmptyInput);
        let source = SourceSpan {
            unemployment: span(u)?,
            vacancy: span(v)?,
        };
        let (u_hat, v_hat) = align(&unemployment_indicator(u)?, &vacancy_indicator(v)?)?;
        let x = minimum_indicator(&u_hat, &v_hat)?;
        Ok(IndicatorSet {
            u_hat,
            v_hat,
            x,
            source,
        })
    }

    pub fn start(&self) -> Month {
        self.x.start()
    }

    pub fn end(&self) -> Month {
        self.x.end().expect("indicator set is never empty")
    }

    pub fn at(&self, month: Month) -> Option<IndicatorReading> {
        Some(IndicatorReading {
            month,
            u_hat: self.u_hat.get(month)?,
            v_hat: self.v_hat.get(month)?,
            x: self.x.get(month)?,
        })
    }

    pub fn latest(&self) -> IndicatorReading {
        self.at(self.end()).expect("last month is defined")
    }

    pub fn readings(&self) -> impl Iterator<Item = IndicatorReading> + '_ {
        self.x.defined().map(|(month, _)| self.at(month).unwrap())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IndicatorReading {
    pub month: Month,
    pub u_hat: f64,
    pub v_hat: f64,
    pub x: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(s: &str) -> Month {
        s.parse().unwrap()
    }

    /// Direct evaluation of the indicator formulas, one month at a time.
    fn naive_indicator(values: &[f64], unemployment: bool) -> Vec<Option<f64>> {
        let avg = |t: usize| (values[t] + values[t - 1] + values[t - 2]) / 3.0;
        (0..values.len())
            .map(|t| {
                if t < 14 {
                    return None;
                }
                let window = (0..=12).map(|s| avg(t - s));
                Some(if unemployment {
                    avg(t) - window.fold(f64::INFINITY, f64::min)
                } else {
                    window.fold(f64::NEG_INFINITY, f64::max) - avg(t)
                })
            })
            .collect()
    }

    fn lcg_series(seed: u64, n: usize) -> Vec<f64> {
        let mut state = seed;
        (0..n)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                0.03 + 0.04 * ((state >> 33) as f64 / (1u64 << 31) as f64)
            })
            .collect()
    }

    #[test]
    fn nonincreasing_unemployment_gives_zero() {
        let u = MonthlySeries::new(m("2010-01"), (0..40).map(|i| 0.09 - 0.001 * i as f64).collect());
        let u_hat = unemployment_indicator(&u).unwrap();
        assert_eq!(u_hat.first_defined(), Some(m("2011-03")));
        assert!(u_hat.defined().all(|(_, v)| v == 0.0));
    }

    #[test]
    fn nondecreasing_vacancies_give_zero() {
        let v = MonthlySeries::new(m("2010-01"), (0..40).map(|i| 0.02 + 0.0005 * (i / 2) as f64).collect());
        assert!(vacancy_indicator(&v).unwrap().defined().all(|(_, x)| x == 0.0));
    }

    #[test]
    fn vacancy_drop_from_peak() {
        // Smoothed rate flat at 0.040 then flat at 0.038: gap of 0.002 once the
        // average has fully moved.
        let mut values = vec![0.040; 20];
        values.extend([0.038; 5]);
        let v = MonthlySeries::new(m("2000-01"), values);
        let v_hat = vacancy_indicator(&v).unwrap();
        let last = v_hat.get(m("2002-01")).unwrap();
        assert!((last - 0.002).abs() < 1e-12);
    }

    #[test]
    fn indicators_match_naive_formula() {
        let values = lcg_series(7, 40);
        let s = MonthlySeries::new(m("1990-01"), values.clone());
        for (computed, expected) in [
            (unemployment_indicator(&s).unwrap(), naive_indicator(&values, true)),
            (vacancy_indicator(&s).unwrap(), naive_indicator(&values, false)),
        ] {
            for (got, want) in computed.values().iter().zip(&expected) {
                match (got, want) {
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                    (None, None) => {}
                    other => panic!("definedness mismatch: {other:?}"),
                }
            }
        }
    }

    #[test]
    fn short_series_is_rejected() {
        let u = MonthlySeries::new(m("2000-01"), vec![0.05; 14]);
        let err = unemployment_indicator(&u).unwrap_err();
        assert!(err.to_string().starts_with("insufficient history"));
        assert!(vacancy_indicator(&u).is_err());
        let u = MonthlySeries::new(m("2000-01"), vec![0.05; 15]);
        assert_eq!(unemployment_indicator(&u).unwrap().defined_len(), 1);
    }

    #[test]
    fn minimum_with_zero_is_zero() {
        let a = MonthlySeries::new(m("2000-01"), vec![0.0, 0.004, 0.001]);
        let b = MonthlySeries::new(m("2000-01"), vec![0.003, 0.0, 0.002]);
        let x = minimum_indicator(&a, &b).unwrap();
        assert_eq!(x.values(), &[Some(0.0), Some(0.0), Some(0.001)]);
        let shifted = MonthlySeries::new(m("2000-02"), vec![0.0, 0.0, 0.0]);
        assert!(matches!(minimum_indicator(&a, &shifted), Err(Error::Misaligned(_))));
    }

    #[test]
    fn indicator_set_uses_intersection_of_defined_ranges() {
        let u = MonthlySeries::new(m("1948-01"), lcg_series(1, 60));
        let v = MonthlySeries::new(m("1949-01"), lcg_series(2, 60));
        let set = IndicatorSet::from_rates(&u, &v).unwrap();
        assert_eq!(set.start(), m("1950-03"));
        assert_eq!(set.end(), m("1952-12"));
        assert_eq!(set.u_hat.start(), set.x.start());
        assert_eq!(set.v_hat.len(), set.x.len());
        for r in set.readings() {
            assert_eq!(r.x, r.u_hat.min(r.v_hat));
        }
        assert_eq!(set.source.unemployment, (m("1948-01"), m("1952-12")));
    }
}
