//! Dataset-independent invariants, written as runnable checks so that both the
//! property test target and the acceptance harness execute the same code.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use recession_core::backtest::{
    calibrate, calibrate_high, calibrate_low, match_episodes, Grid, Recession, RecessionCalendar, Span,
};
use recession_core::indicators::{minimum_indicator, unemployment_indicator, vacancy_indicator};
use recession_core::rules::{
    classify, date_start, detect_episodes, recession_probability, Episode, RecessionState, TwoSidedRule,
};
use recession_core::timeseries::{rolling_max, rolling_min, trailing_average};
use recession_core::{Month, MonthlySeries};

pub type Check = fn(u32) -> Result<(), String>;

/// Name and runner of every property, in report order.
pub const ALL: [(&str, Check); 11] = [
    ("rolling min/max agree with naive window scan", rolling_matches_naive),
    ("rolling min <= series <= rolling max", rolling_bounds),
    ("trailing average shifts with added constant", average_shift_invariance),
    ("indicators nonnegative and x dominated by both", indicator_sign_and_domination),
    ("indicators level invariant and scale equivariant", indicator_level_and_scale),
    ("dating returns t-1 or t, ties to t, shift invariant", dating_rule),
    ("probability clamped, monotone, consistent with classify", probability_rule),
    ("higher thresholds give nested episodes with peak >= threshold", episode_nesting),
    ("backtest partition identities", backtest_partition),
    ("calibrated band has no false positives or negatives", calibrated_band_is_clean),
    ("calibration monotone in span and recessions", calibration_monotonicity),
];

fn run<S: Strategy>(cases: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn base() -> Month {
    Month::new(1990, 1).unwrap()
}

/// Series with an optional undefined prefix followed by `values`.
fn series_with_prefix(prefix: usize, values: &[f64]) -> MonthlySeries {
    let mut all = vec![None; prefix];
    all.extend(values.iter().copied().map(Some));
    MonthlySeries::from_options(base(), all).unwrap()
}

fn naive_window(s: &MonthlySeries, lookback: usize, pick: fn(f64, f64) -> f64) -> Vec<Option<f64>> {
    let v = s.values();
    (0..v.len())
        .map(|t| {
            if t < lookback {
                return None;
            }
            v[t - lookback..=t]
                .iter()
                .try_fold(None, |acc: Option<f64>, x| x.map(|x| Some(acc.map_or(x, |a| pick(a, x)))))
                .flatten()
        })
        .collect()
}

fn rates(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..0.15f64, len)
}

pub fn rolling_matches_naive(cases: u32) -> Result<(), String> {
    let strategy = (0usize..6, prop::collection::vec(-1.0..1.0f64, 1..80), 0usize..16);
    run(cases, strategy, |(prefix, values, lookback)| {
        let s = series_with_prefix(prefix, &values);
        let (lo, hi) = (rolling_min(&s, lookback).unwrap(), rolling_max(&s, lookback).unwrap());
        let (naive_lo, naive_hi) = (naive_window(&s, lookback, f64::min), naive_window(&s, lookback, f64::max));
        prop_assert_eq!(lo.values(), naive_lo.as_slice());
        prop_assert_eq!(hi.values(), naive_hi.as_slice());
        Ok(())
    })
}

pub fn rolling_bounds(cases: u32) -> Result<(), String> {
    let strategy = (prop::collection::vec(-5.0..5.0f64, 1..60), 0usize..14);
    run(cases, strategy, |(values, lookback)| {
        let s = MonthlySeries::new(base(), values);
        let lo = rolling_min(&s, lookback).unwrap();
        let hi = rolling_max(&s, lookback).unwrap();
        for (month, x) in s.defined() {
            if let (Some(a), Some(b)) = (lo.get(month), hi.get(month)) {
                prop_assert!(a <= x && x <= b);
            }
        }
        if lookback == 0 {
            prop_assert_eq!(&lo, &s);
            prop_assert_eq!(&hi, &s);
        }
        Ok(())
    })
}

pub fn average_shift_invariance(cases: u32) -> Result<(), String> {
    let strategy = (rates(1..50), 1usize..8, -1.0..1.0f64);
    run(cases, strategy, |(values, window, c)| {
        let s = MonthlySeries::new(base(), values);
        let plain = trailing_average(&s, window).unwrap();
        let shifted = trailing_average(&s.map(|x| x + c), window).unwrap();
        for (a, b) in plain.values().iter().zip(shifted.values()) {
            match (a, b) {
                (Some(a), Some(b)) => prop_assert!((a + c - b).abs() < 1e-12),
                (None, None) => {}
                _ => prop_assert!(false, "definedness differs"),
            }
        }
        Ok(())
    })
}

pub fn indicator_sign_and_domination(cases: u32) -> Result<(), String> {
    let strategy = (rates(15..80), rates(15..80));
    run(cases, strategy, |(u, v)| {
        let n = u.len().min(v.len());
        let u_hat = unemployment_indicator(&MonthlySeries::new(base(), u[..n].to_vec())).unwrap();
        let v_hat = vacancy_indicator(&MonthlySeries::new(base(), v[..n].to_vec())).unwrap();
        let x = minimum_indicator(&u_hat, &v_hat).unwrap();
        prop_assert_eq!(x.defined_len(), n - 14);
        for (month, xv) in x.defined() {
            let (a, b) = (u_hat.get(month).unwrap(), v_hat.get(month).unwrap());
            prop_assert!(a >= 0.0 && b >= 0.0 && xv >= 0.0);
            prop_assert!(xv <= a && xv <= b);
            prop_assert_eq!(xv, a.min(b));
        }
        Ok(())
    })
}

pub fn indicator_level_and_scale(cases: u32) -> Result<(), String> {
    let strategy = (rates(15..60), -0.02..0.05f64, 0.25..4.0f64);
    run(cases, strategy, |(u, shift, scale)| {
        let s = MonthlySeries::new(base(), u);
        for indicator in [unemployment_indicator, vacancy_indicator] {
            let plain = indicator(&s).unwrap();
            let shifted = indicator(&s.map(|x| x + shift)).unwrap();
            let scaled = indicator(&s.map(|x| x * scale)).unwrap();
            for (month, value) in plain.defined() {
                prop_assert!((shifted.get(month).unwrap() - value).abs() < 1e-12);
                prop_assert!((scaled.get(month).unwrap() - scale * value).abs() < 1e-12);
            }
        }
        Ok(())
    })
}

pub fn dating_rule(cases: u32) -> Result<(), String> {
    // Dyadic values make exact ties reachable.
    let strategy = (200u32..800, 1u32..200, 0u32..200, any::<bool>(), -600i32..600);
    run(cases, strategy, |(t, below, above, tie, offset)| {
        let above = if tie { below } else { above };
        let (prev, curr, threshold) = (
            (t - below) as f64 / 1024.0,
            (t + above) as f64 / 1024.0,
            t as f64 / 1024.0,
        );
        let month = Month::new(2000, 6).unwrap();
        let dated = date_start(Some(prev), curr, month, threshold).unwrap();
        prop_assert!(dated == month || dated == month.pred());
        let expect_prev = threshold - prev < curr - threshold;
        prop_assert_eq!(dated == month.pred(), expect_prev);
        if threshold - prev == curr - threshold {
            prop_assert_eq!(dated, month);
        }
        let moved = date_start(Some(prev), curr, month + offset, threshold).unwrap();
        prop_assert_eq!(moved - dated, offset);

        // Same answer through episode detection on a shifted series.
        let s = MonthlySeries::new(month.pred() + offset, vec![prev, curr]);
        let eps = detect_episodes(&s, threshold).unwrap();
        prop_assert_eq!(eps.len(), 1);
        prop_assert_eq!(eps[0].dated_start, dated + offset);
        Ok(())
    })
}

pub fn probability_rule(cases: u32) -> Result<(), String> {
    let strategy = (0.0005..0.01f64, 0.0001..0.01f64, 0.0..0.03f64, 0.0..0.03f64);
    run(cases, strategy, |(a, width, x, y)| {
        let b = a + width;
        let rule = TwoSidedRule::new(a, b).unwrap();
        let (px, py) = (recession_probability(x, &rule), recession_probability(y, &rule));
        prop_assert!((0.0..=1.0).contains(&px));
        if x <= y {
            prop_assert!(px <= py);
        }
        match classify(x, &rule) {
            RecessionState::Below => prop_assert_eq!(px, 0.0),
            RecessionState::Certain => prop_assert_eq!(px, 1.0),
            RecessionState::Possible => prop_assert!(px < 1.0),
        }
        prop_assert_eq!(recession_probability(a, &rule), 0.0);
        prop_assert_eq!(recession_probability(b, &rule), 1.0);
        Ok(())
    })
}

pub fn episode_nesting(cases: u32) -> Result<(), String> {
    let strategy = (prop::collection::vec(0.0..0.01f64, 1..120), 0.0001..0.01f64, 0.0001..0.01f64);
    run(cases, strategy, |(values, t1, t2)| {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let s = MonthlySeries::new(base(), values);
        let wide = detect_episodes(&s, lo).unwrap();
        let narrow = detect_episodes(&s, hi).unwrap();
        for ep in &narrow {
            prop_assert!(ep.peak_value >= hi);
            prop_assert!(ep.first_above <= ep.peak_month && ep.peak_month <= ep.last_above);
            prop_assert!(ep.dated_start == ep.first_above || ep.dated_start == ep.first_above.pred());
            prop_assert!(wide
                .iter()
                .any(|w| w.first_above <= ep.first_above && ep.last_above <= w.last_above));
        }
        for pair in wide.windows(2) {
            prop_assert!(pair[0].last_above.succ() < pair[1].first_above);
        }
        Ok(())
    })
}

/// Random calendar with `count` recessions separated by quiet gaps, inside a
/// series of `len` months starting at `base()`.
fn calendar_strategy() -> impl Strategy<Value = (RecessionCalendar, usize)> {
    prop::collection::vec((6i32..20, 1i32..8), 1..6).prop_map(|parts| {
        let mut month = base() + 16;
        let mut recessions = Vec::new();
        for (gap, length) in parts {
            let peak = month + gap;
            let trough = peak + length;
            recessions.push(Recession { peak, trough });
            month = trough;
        }
        let len = (month - base()) as usize + 12;
        (RecessionCalendar::new(recessions).unwrap(), len)
    })
}

fn episodes(x: &MonthlySeries, threshold: f64) -> Vec<Episode> {
    detect_episodes(x, threshold).unwrap()
}

pub fn backtest_partition(cases: u32) -> Result<(), String> {
    let strategy = (calendar_strategy(), prop::collection::vec(0.0..0.01f64, 200), 0.0005..0.009f64, 0u32..6);
    run(cases, strategy, |((cal, len), raw, threshold, window)| {
        let x = MonthlySeries::new(base(), raw[..len.min(raw.len())].to_vec());
        let eps = episodes(&x, threshold);
        let out = match_episodes(&eps, &cal, window);
        let matched = out.matched().count();
        prop_assert_eq!(matched + out.false_negatives().len(), cal.len());
        prop_assert_eq!(matched + out.false_positives.len(), eps.len());
        for row in out.matched() {
            prop_assert_eq!(row.delay, Some(row.detected_start.unwrap() - row.official_start));
        }
        Ok(())
    })
}

/// Indicator that is zero between recessions apart from sub-threshold noise,
/// and has one bump inside each recession.
fn structured_indicator(cal: &RecessionCalendar, len: usize, noise: &[f64], bumps: &[f64]) -> MonthlySeries {
    let values = (0..len)
        .map(|i| {
            let month = base() + i as i32;
            match cal.recessions().iter().position(|r| r.contains(month)) {
                Some(k) => bumps[k % bumps.len()] * if month == cal.recessions()[k].start() { 0.5 } else { 1.0 },
                None if cal.recessions().iter().any(|r| month == r.peak || month == r.trough.succ()) => 0.0,
                None => noise[i % noise.len()],
            }
        })
        .collect();
    MonthlySeries::new(base(), values)
}

pub fn calibrated_band_is_clean(cases: u32) -> Result<(), String> {
    let strategy = (
        calendar_strategy(),
        prop::collection::vec(0.0..0.006f64, 1..40),
        prop::collection::vec(0.002..0.012f64, 1..6),
    );
    run(cases, strategy, |((cal, len), noise, bumps)| {
        let x = structured_indicator(&cal, len, &noise, &bumps);
        let span = Span::new(base(), x.end().unwrap()).unwrap();
        let calibration = calibrate(&x, &cal, span, Grid::TENTH_PP, 0).unwrap();
        let (lo, hi) = (calibration.low.threshold, calibration.high.threshold);
        let mut k = 1;
        while Grid::TENTH_PP.value(k) <= hi {
            let theta = Grid::TENTH_PP.value(k);
            if theta >= lo {
                let out = match_episodes(&episodes(&x, theta), &cal, 0);
                prop_assert!(out.false_positives.is_empty(), "false positive at {}", theta);
                prop_assert!(out.false_negatives().is_empty(), "false negative at {}", theta);
            }
            k += 1;
        }
        Ok(())
    })
}

pub fn calibration_monotonicity(cases: u32) -> Result<(), String> {
    let strategy = (
        calendar_strategy(),
        prop::collection::vec(0.0..0.006f64, 1..40),
        prop::collection::vec(0.002..0.012f64, 1..6),
        prop::collection::vec(0.0..0.01f64, 1..24),
    );
    run(cases, strategy, |((cal, len), noise, bumps, tail)| {
        let x = structured_indicator(&cal, len, &noise, &bumps);
        let end = x.end().unwrap();
        // Extend with recession-free months.
        let mut extended_values: Vec<f64> = x.values().iter().map(|v| v.unwrap()).collect();
        extended_values.extend(&tail);
        let extended = MonthlySeries::new(base(), extended_values);
        let short = Span::new(base(), end).unwrap();
        let long = Span::new(base(), extended.end().unwrap()).unwrap();
        let low_short = calibrate_low(&extended, &cal, short, Grid::TENTH_PP, 3).unwrap();
        let low_long = calibrate_low(&extended, &cal, long, Grid::TENTH_PP, 3).unwrap();
        prop_assert!(low_long.threshold >= low_short.threshold);

        // Dropping a recession never lowers the upper threshold.
        let all = calibrate_high(&x, &cal, short, Grid::TENTH_PP).unwrap();
        if cal.len() > 1 {
            let fewer = RecessionCalendar::new(cal.recessions()[1..].to_vec()).unwrap();
            let high_fewer = calibrate_high(&x, &fewer, short, Grid::TENTH_PP).unwrap();
            prop_assert!(all.threshold <= high_fewer.threshold);
        }
        Ok(())
    })
}
