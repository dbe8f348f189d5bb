#![allow(dead_code)]

pub mod properties;

use std::path::PathBuf;

use recession_core::backtest::{RecessionCalendar, Span};
use recession_core::ingest::{BuildOptions, Dataset, Scope, SourceFiles};
use recession_core::{Month, Result};

pub fn m(s: &str) -> Month {
    s.parse().unwrap()
}

pub fn span(from: &str, to: &str) -> Span {
    Span::new(m(from), m(to)).unwrap()
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn sources() -> SourceFiles {
    SourceFiles::in_dir(data_dir())
}

pub fn modern_dataset() -> Dataset {
    Dataset::build(&sources(), BuildOptions::default()).expect("bundled modern data builds")
}

/// The 1929 extension needs source files that are not bundled; callers
/// report the error instead of panicking.
pub fn full_dataset() -> Result<Dataset> {
    Dataset::build(
        &sources(),
        BuildOptions {
            scope: Scope::Full,
            ..BuildOptions::default()
        },
    )
}

pub fn calendar() -> RecessionCalendar {
    let text = std::fs::read_to_string(sources().calendar).expect("bundled calendar");
    RecessionCalendar::parse(&text).expect("calendar parses")
}

/// Official start, Sahm-rule start, minimum-rule start (1960-2022).
pub const MODERN_STARTS: [(&str, &str, &str); 9] = [
    ("1960-05", "1960-09", "1960-07"),
    ("1970-01", "1970-02", "1970-01"),
    ("1973-12", "1974-06", "1974-02"),
    ("1980-02", "1980-02", "1980-01"),
    ("1981-08", "1981-11", "1981-10"),
    ("1990-08", "1990-10", "1990-08"),
    ("2001-04", "2001-06", "2001-03"),
    ("2008-01", "2008-02", "2008-04"),
    ("2020-03", "2020-03", "2020-03"),
];

/// Official start, minimum-rule start (1929-1959).
pub const HISTORICAL_STARTS: [(&str, &str); 6] = [
    ("1929-09", "1930-02"),
    ("1937-06", "1937-11"),
    ("1945-03", "1945-08"),
    ("1948-12", "1948-12"),
    ("1953-08", "1953-10"),
    ("1957-09", "1957-07"),
];
