//! Transformations that turn published levels into rates and join sources.

use crate::error::{Error, Result};
use crate::timeseries::{align, Month, MonthlySeries};

/// Pointwise `numerator / denominator` over the months both cover.
fn ratio(numerator: &MonthlySeries, denominator: &MonthlySeries) -> Result<MonthlySeries> {
    let (num, den) = align(numerator, denominator)?;
    if let Some((month, value)) = den.defined().find(|(_, v)| *v <= 0.0) {
        return Err(Error::NonPositiveDenominator { month, value });
    }
    num.zip_with(&den, |n, d| n / d)
}

/// Unemployed persons divided by the civilian labor force, unrounded.
pub fn unemployment_rate(unemployed: &MonthlySeries, labor_force: &MonthlySeries) -> Result<MonthlySeries> {
    ratio(unemployed, labor_force)
}

/// Job openings divided by the civilian labor force. Openings are expected to
/// be shifted already (see [`shift_forward`]).
pub fn vacancy_rate_jolts(openings: &MonthlySeries, labor_force: &MonthlySeries) -> Result<MonthlySeries> {
    ratio(openings, labor_force)
}

/// Reassigns the value published for month `m` to month `m + k`.
///
/// Job openings refer to the last business day of a month, which sits closer
/// to the next month's household-survey reference week.
pub fn shift_forward(s: &MonthlySeries, k: u32) -> MonthlySeries {
    MonthlySeries::from_options(s.start() + k as i32, s.values().to_vec())
        .expect("shifting preserves the warm-up structure")
}

/// Scales `source` so that it equals `target` at `anchor`.
pub fn rescale_to_anchor(source: &MonthlySeries, target: &MonthlySeries, anchor: Month) -> Result<MonthlySeries> {
    let at = |s: &MonthlySeries| s.get(anchor).filter(|v| *v != 0.0).ok_or(Error::BadAnchor(anchor));
    let factor = at(target)? / at(source)?;
    Ok(source.map(|v| v * factor))
}

/// `early` before `cutover`, `late` from `cutover` on.
pub fn splice(early: &MonthlySeries, late: &MonthlySeries, cutover: Month) -> Result<MonthlySeries> {
    let last_early = cutover.pred();
    if early.get(last_early).is_none() || late.get(cutover).is_none() {
        return Err(Error::SpliceGap(cutover));
    }
    let late_end = late.end().expect("late covers the cutover");
    let mut values: Vec<Option<f64>> = early
        .slice(early.start(), last_early)?
        .values()
        .to_vec();
    values.extend_from_slice(late.slice(cutover, late_end)?.values());
    MonthlySeries::from_options(early.start(), values)
}
