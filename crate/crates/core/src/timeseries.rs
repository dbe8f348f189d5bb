//! Calendar months and contiguous monthly series.
//!
//! A [`MonthlySeries`] covers consecutive months from its start month with no
//! gaps. Positions may be undefined, but only as a leading warm-up prefix:
//! windowed operations leave their first `window - 1` outputs undefined and
//! every later position is defined.
//!
//! Rolling extrema use a monotonic deque of indices so each element enters and
//! leaves the window once, giving O(n) time regardless of the lookback.

use std::collections::VecDeque;
use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A Gregorian calendar month, totally ordered by `year * 12 + (month - 1)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    ordinal: i32,
}

impl Month {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidMonth(format!("{year}-{month}")));
        }
        Ok(Month {
            ordinal: year * 12 + month as i32 - 1,
        })
    }

    pub const fn from_ordinal(ordinal: i32) -> Self {
        Month { ordinal }
    }

    pub const fn ordinal(self) -> i32 {
        self.ordinal
    }

    pub const fn year(self) -> i32 {
        self.ordinal.div_euclid(12)
    }

    /// Month of year, 1..=12.
    pub const fn month(self) -> u32 {
        self.ordinal.rem_euclid(12) as u32 + 1
    }

    pub const fn add_months(self, k: i32) -> Self {
        Month {
            ordinal: self.ordinal + k,
        }
    }

    pub const fn succ(self) -> Self {
        self.add_months(1)
    }

    pub const fn pred(self) -> Self {
        self.add_months(-1)
    }

    /// Signed number of months from `earlier` to `self`.
    pub const fn months_since(self, earlier: Month) -> i32 {
        self.ordinal - earlier.ordinal
    }
}

impl Add<i32> for Month {
    type Output = Month;

    fn add(self, k: i32) -> Month {
        self.add_months(k)
    }
}

impl Sub<i32> for Month {
    type Output = Month;

    fn sub(self, k: i32) -> Month {
        self.add_months(-k)
    }
}

impl Sub<Month> for Month {
    type Output = i32;

    fn sub(self, other: Month) -> i32 {
        self.months_since(other)
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year(), self.month())
    }
}

impl fmt::Debug for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Month {
    type Err = Error;

    /// Parses `YYYY-MM`. A trailing day (`YYYY-MM-DD`) is accepted and ignored.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMonth(s.to_string());
        let mut parts = s.trim().splitn(3, '-');
        let year = parts.next().ok_or_else(bad)?;
        let month = parts.next().ok_or_else(bad)?;
        if year.len() != 4 || month.len() != 2 {
            return Err(bad());
        }
        if let Some(day) = parts.next() {
            if day.len() != 2 || !day.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let month: u32 = month.parse().map_err(|_| bad())?;
        Month::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for Month {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Month {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Contiguous monthly series with an optional undefined warm-up prefix.
#[derive(Clone, PartialEq)]
pub struct MonthlySeries {
    start: Month,
    values: Vec<Option<f64>>,
}

impl fmt::Debug for MonthlySeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonthlySeries")
            .field("start", &self.start)
            .field("len", &self.values.len())
            .field("defined_from", &self.first_defined())
            .finish()
    }
}

impl MonthlySeries {
    /// A fully defined series.
    pub fn new(start: Month, values: Vec<f64>) -> Self {
        MonthlySeries {
            start,
            values: values.into_iter().map(Some).collect(),
        }
    }

    /// Builds a series from optional values, rejecting undefined positions
    /// that follow a defined one.
    pub fn from_options(start: Month, values: Vec<Option<f64>>) -> Result<Self> {
        let first = values.iter().position(Option::is_some).unwrap_or(values.len());
        if let Some(offset) = values[first..].iter().position(Option::is_none) {
            return Err(Error::InteriorUndefined(start + (first + offset) as i32));
        }
        Ok(MonthlySeries { start, values })
    }

    pub fn start(&self) -> Month {
        self.start
    }

    /// Last month covered (defined or not). `None` for an empty series.
    pub fn end(&self) -> Option<Month> {
        (!self.values.is_empty()).then(|| self.start + (self.values.len() as i32 - 1))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn month_at(&self, index: usize) -> Month {
        self.start + index as i32
    }

    fn index_of(&self, month: Month) -> Option<usize> {
        let offset = month - self.start;
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    /// Value at `month`; `None` when outside the span or in the warm-up prefix.
    pub fn get(&self, month: Month) -> Option<f64> {
        self.index_of(month).and_then(|i| self.values[i])
    }

    pub fn covers(&self, month: Month) -> bool {
        self.index_of(month).is_some()
    }

    fn first_defined_index(&self) -> Option<usize> {
        self.values.iter().position(Option::is_some)
    }

    pub fn first_defined(&self) -> Option<Month> {
        self.first_defined_index().map(|i| self.month_at(i))
    }

    /// First and last defined months.
    pub fn defined_range(&self) -> Option<(Month, Month)> {
        Some((self.first_defined()?, self.end()?))
    }

    pub fn defined_len(&self) -> usize {
        self.first_defined_index()
            .map_or(0, |i| self.values.len() - i)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Month, Option<f64>)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, v)| (self.month_at(i), *v))
    }

    /// Defined `(month, value)` pairs in order.
    pub fn defined(&self) -> impl Iterator<Item = (Month, f64)> + '_ {
        self.iter().filter_map(|(m, v)| v.map(|v| (m, v)))
    }

    /// Sub-series covering `from..=to`, clipped to the series span.
    pub fn slice(&self, from: Month, to: Month) -> Result<MonthlySeries> {
        let (Some(end), true) = (self.end(), from <= to) else {
            return Err(Error::EmptyInput);
        };
        let lo = from.max(self.start);
        let hi = to.min(end);
        if lo > hi {
            return Err(Error::NoOverlap {
                a: format!("{}..{}", self.start, end),
                b: format!("{from}..{to}"),
            });
        }
        let i = (lo - self.start) as usize;
        let j = (hi - self.start) as usize;
        Ok(MonthlySeries {
            start: lo,
            values: self.values[i..=j].to_vec(),
        })
    }

    /// Applies `f` to every defined value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> MonthlySeries {
        MonthlySeries {
            start: self.start,
            values: self.values.iter().map(|v| v.map(&f)).collect(),
        }
    }

    /// Combines two series over identical spans, pointwise on months where
    /// both are defined.
    pub fn zip_with(
        &self,
        other: &MonthlySeries,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<MonthlySeries> {
        if self.start != other.start || self.len() != other.len() {
            return Err(Error::Misaligned(format!(
                "{:?} vs {:?}",
                self.span_label(),
                other.span_label()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| Some(f((*a)?, (*b)?)))
            .collect();
        MonthlySeries::from_options(self.start, values)
    }

    pub(crate) fn span_label(&self) -> String {
        match self.end() {
            Some(end) => format!("{}..{}", self.start, end),
            None => "empty".to_string(),
        }
    }

    /// The defined suffix as plain values, with its first month.
    fn defined_slice(&self) -> Option<(usize, Vec<f64>)> {
        let first = self.first_defined_index()?;
        let values = self.values[first..].iter().map(|v| v.unwrap()).collect();
        Some((first, values))
    }
}

/// Mean of the current and previous `window - 1` values at each month.
pub fn trailing_average(s: &MonthlySeries, window: usize) -> Result<MonthlySeries> {
    if s.is_empty() {
        return Err(Error::EmptyInput);
    }
    if window == 0 {
        return Err(Error::InvalidWindow(window));
    }
    let mut out = vec![None; s.len()];
    if let Some((first, values)) = s.defined_slice() {
        let divisor = window as f64;
        for (i, w) in values.windows(window).enumerate() {
            out[first + i + window - 1] = Some(w.iter().sum::<f64>() / divisor);
        }
    }
    Ok(MonthlySeries {
        start: s.start,
        values: out,
    })
}

/// Minimum over months `t - lookback ..= t`, current month included.
pub fn rolling_min(s: &MonthlySeries, lookback: usize) -> Result<MonthlySeries> {
    rolling_extremum(s, lookback, |candidate, incumbent| candidate <= incumbent)
}

/// Maximum over months `t - lookback ..= t`, current month included.
pub fn rolling_max(s: &MonthlySeries, lookback: usize) -> Result<MonthlySeries> {
    rolling_extremum(s, lookback, |candidate, incumbent| candidate >= incumbent)
}

/// `dominates(a, b)` is true when `a` makes `b` useless as a future extremum.
fn rolling_extremum(
    s: &MonthlySeries,
    lookback: usize,
    dominates: impl Fn(f64, f64) -> bool,
) -> Result<MonthlySeries> {
    if s.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut out = vec![None; s.len()];
    if let Some((first, values)) = s.defined_slice() {
        let mut deque: VecDeque<usize> = VecDeque::with_capacity(lookback + 1);
        for (i, &value) in values.iter().enumerate() {
            while deque.back().is_some_and(|&j| dominates(value, values[j])) {
                deque.pop_back();
            }
            deque.push_back(i);
            while deque.front().is_some_and(|&j| j + lookback < i) {
                deque.pop_front();
            }
            if i >= lookback {
                out[first + i] = Some(values[deque[0]]);
            }
        }
    }
    Ok(MonthlySeries {
        start: s.start,
        values: out,
    })
}

/// Restricts both series to the intersection of their defined ranges.
pub fn align(a: &MonthlySeries, b: &MonthlySeries) -> Result<(MonthlySeries, MonthlySeries)> {
    let no_overlap = || Error::NoOverlap {
        a: a.span_label(),
        b: b.span_label(),
    };
    let (a_lo, a_hi) = a.defined_range().ok_or_else(no_overlap)?;
    let (b_lo, b_hi) = b.defined_range().ok_or_else(no_overlap)?;
    let lo = a_lo.max(b_lo);
    let hi = a_hi.min(b_hi);
    if lo > hi {
        return Err(no_overlap());
    }
    Ok((a.slice(lo, hi)?, b.slice(lo, hi)?))
}
