//! Monthly text tables: an optional header row followed by `YYYY-MM,value`
//! rows in strictly increasing month order.

use crate::error::{Error, Result};
use crate::timeseries::{Month, MonthlySeries};

/// A parsed table together with its header, when present.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlyTable {
    pub header: Option<String>,
    pub series: MonthlySeries,
}

/// Parses a monthly table into a contiguous series.
///
/// Values are kept at full precision. An empty value or `.` marks an
/// undefined month, which is only accepted before the first defined value.
pub fn parse_monthly_table(content: &str) -> Result<MonthlySeries> {
    parse_table(content).map(|t| t.series)
}

pub fn parse_table(content: &str) -> Result<MonthlyTable> {
    let mut header = None;
    let mut start: Option<Month> = None;
    let mut last: Option<Month> = None;
    let mut values: Vec<Option<f64>> = Vec::new();

    for (i, raw) in content.lines().enumerate() {
        let row = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (date, value) = line.split_once(',').ok_or_else(|| Error::Parse {
            row,
            message: format!("expected `YYYY-MM,value`, got {line:?}"),
        })?;
        let month: Month = match date.trim().parse() {
            Ok(m) => m,
            Err(_) if start.is_none() && header.is_none() => {
                header = Some(line.to_string());
                continue;
            }
            Err(e) => {
                return Err(Error::Parse {
                    row,
                    message: e.to_string(),
                })
            }
        };
        if let Some(prev) = last {
            if month == prev {
                return Err(Error::DuplicateMonth(month));
            }
            if month < prev {
                return Err(Error::OutOfOrder(month));
            }
            if month != prev.succ() {
                return Err(Error::Gap(prev.succ()));
            }
        }
        let value = value.trim();
        let parsed = if value.is_empty() || value == "." {
            None
        } else {
            let v: f64 = value.parse().map_err(|_| Error::Parse {
                row,
                message: format!("non-numeric value {value:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    message: format!("non-finite value {value:?}"),
                });
            }
            Some(v)
        };
        if parsed.is_none() && values.iter().any(Option::is_some) {
            return Err(Error::Parse {
                row,
                message: format!("undefined value at {month} after defined data"),
            });
        }
        start.get_or_insert(month);
        last = Some(month);
        values.push(parsed);
    }

    let start = start.ok_or(Error::EmptyInput)?;
    Ok(MonthlyTable {
        header,
        series: MonthlySeries::from_options(start, values)?,
    })
}

/// Canonical text form: header line, then one `YYYY-MM,value` row per month
/// with the shortest representation that round-trips exactly.
pub fn serialize_monthly_table(header: &str, series: &MonthlySeries) -> String {
    let mut out = String::with_capacity(16 * (series.len() + 1));
    out.push_str(header);
    out.push('\n');
    for (month, value) in series.iter() {
        out.push_str(&month.to_string());
        out.push(',');
        if let Some(v) = value {
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}
