//! Real-time recession detection from unemployment and job-vacancy rates.
//!
//! The pipeline smooths both rates with a 3-month trailing average, measures
//! how far unemployment has risen above its 12-month low and how far vacancies
//! have fallen below their 12-month high, and takes the minimum of the two as
//! the recession indicator. Threshold rules on that indicator date recession
//! starts, and a two-sided rule turns it into a recession probability.

pub mod backtest;
pub mod error;
pub mod indicators;
pub mod ingest;
pub mod rules;
pub mod timeseries;

pub use error::{Error, Result};
pub use indicators::{IndicatorReading, IndicatorSet};
pub use rules::{Episode, RecessionState, TwoSidedRule};
pub use timeseries::{Month, MonthlySeries};
