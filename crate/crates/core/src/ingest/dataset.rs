//! Builds the unified monthly unemployment and vacancy rates from source
//! tables, recording a provenance chain for every series.
//!
//! Modern construction:
//! - unemployment rate = unemployed / civilian labor force;
//! - vacancy rate = composite help-wanted level / labor force through
//!   December 2000, then job openings shifted forward one month / labor force.
//!
//! The historical extension splices a published monthly unemployment rate in
//! before January 1948, and a help-wanted index rescaled to the vacancy rate
//! at an anchor month in before January 1951.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::indicators::{IndicatorSet, SMOOTHING_WINDOW};
use crate::ingest::table::{parse_table, serialize_monthly_table};
use crate::ingest::transform::{rescale_to_anchor, shift_forward, splice, unemployment_rate, vacancy_rate_jolts};
use crate::timeseries::{trailing_average, Month, MonthlySeries};

pub const JOLTS_CUTOVER: Month = Month::from_ordinal(2001 * 12);
pub const CPS_CUTOVER: Month = Month::from_ordinal(1948 * 12);
pub const HELP_WANTED_CUTOVER: Month = Month::from_ordinal(1951 * 12);
/// December 1950.
pub const DEFAULT_METLIFE_ANCHOR: Month = Month::from_ordinal(1950 * 12 + 11);
pub const HISTORICAL_START: Month = Month::from_ordinal(1929 * 12 + 3);
pub const JOLTS_SHIFT: u32 = 1;

/// Paths to the source tables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFiles {
    /// Unemployed persons, thousands (UNEMPLOY).
    pub unemployed: PathBuf,
    /// Civilian labor force, thousands (CLF16OV).
    pub labor_force: PathBuf,
    /// Composite help-wanted vacancy level, thousands, used before 2001.
    pub help_wanted: PathBuf,
    /// JOLTS job openings, thousands (JTSJOL), as published (unshifted).
    pub job_openings: PathBuf,
    /// Monthly unemployment rate in percent, April 1929 to December 1947.
    pub historical_unemployment: PathBuf,
    /// Help-wanted index (any units), April 1929 to December 1950.
    pub historical_help_wanted: PathBuf,
    pub calendar: PathBuf,
}

impl SourceFiles {
    /// Conventional file names inside a data directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        SourceFiles {
            unemployed: dir.join("unemploy.csv"),
            labor_force: dir.join("clf16ov.csv"),
            help_wanted: dir.join("hwi_composite.csv"),
            job_openings: dir.join("jtsjol.csv"),
            historical_unemployment: dir.join("historical_unemployment_rate.csv"),
            historical_help_wanted: dir.join("metlife_hwi.csv"),
            calendar: dir.join("nber_recessions.txt"),
        }
    }

    pub fn has_historical(&self) -> bool {
        self.historical_unemployment.exists() && self.historical_help_wanted.exists()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    /// CPS, help-wanted and JOLTS data only.
    Modern,
    /// Modern data extended back to April 1929.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub id: String,
    pub source: String,
    pub start: Month,
    pub end: Month,
    pub transforms: Vec<String>,
    /// Hex SHA-256 of the source file, empty for derived series.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpliceRecord {
    pub series: String,
    pub cutover: Month,
    pub early: String,
    pub late: String,
    pub anchor: Option<Month>,
}

/// Provenance of a built dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DataManifest {
    pub series: Vec<SeriesRecord>,
    pub splices: Vec<SpliceRecord>,
}

impl DataManifest {
    pub fn record(&self, id: &str) -> Option<&SeriesRecord> {
        self.series.iter().find(|r| r.id == id)
    }

    fn push_derived(&mut self, id: &str, series: &MonthlySeries, transforms: Vec<String>) {
        let (start, end) = series.defined_range().expect("derived series are nonempty");
        self.series.push(SeriesRecord {
            id: id.to_string(),
            source: "derived".to_string(),
            start,
            end,
            transforms,
            sha256: String::new(),
        });
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn load_source(id: &str, path: &Path, manifest: &mut DataManifest) -> Result<MonthlySeries> {
    if !path.exists() {
        return Err(Error::MissingSource {
            series: id.to_string(),
            path: path.to_path_buf(),
        });
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Error::Parse {
        row: 0,
        message: format!("{}: not UTF-8: {e}", path.display()),
    })?;
    let series = parse_table(&text)
        .map_err(|e| Error::Parse {
            row: match &e {
                Error::Parse { row, .. } => *row,
                _ => 0,
            },
            message: format!("{}: {e}", path.display()),
        })?
        .series;
    let (start, end) = series.defined_range().ok_or(Error::EmptyInput)?;
    manifest.series.push(SeriesRecord {
        id: id.to_string(),
        source: path.display().to_string(),
        start,
        end,
        transforms: Vec::new(),
        sha256: sha256_hex(&bytes),
    });
    Ok(series)
}

fn require_from(id: &str, series: &MonthlySeries, needed: Month) -> Result<()> {
    match series.first_defined() {
        Some(first) if first <= needed => Ok(()),
        _ => Err(Error::Coverage {
            series: id.to_string(),
            needed: format!("data from {needed}"),
            available: series.span_label(),
        }),
    }
}

/// Unemployment and vacancy rates (fractions) with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scope: Scope,
    pub u: MonthlySeries,
    pub v: MonthlySeries,
    pub manifest: DataManifest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub scope: Scope,
    pub metlife_anchor: Month,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            scope: Scope::Modern,
            metlife_anchor: DEFAULT_METLIFE_ANCHOR,
        }
    }
}

impl Dataset {
    pub fn build(files: &SourceFiles, options: BuildOptions) -> Result<Dataset> {
        let mut manifest = DataManifest::default();
        let unemployed = load_source("UNEMPLOY", &files.unemployed, &mut manifest)?;
        let labor_force = load_source("CLF16OV", &files.labor_force, &mut manifest)?;
        let help_wanted = load_source("HWI", &files.help_wanted, &mut manifest)?;
        let openings = load_source("JTSJOL", &files.job_openings, &mut manifest)?;

        let mut u = unemployment_rate(&unemployed, &labor_force)?;
        let v_early = vacancy_rate_jolts(&help_wanted, &labor_force)?;
        let shifted = shift_forward(&openings, JOLTS_SHIFT);
        let v_late = vacancy_rate_jolts(&shifted, &labor_force)?;
        let mut v = splice(&v_early, &v_late, JOLTS_CUTOVER)?;
        manifest.splices.push(SpliceRecord {
            series: "v".into(),
            cutover: JOLTS_CUTOVER,
            early: "HWI / CLF16OV".into(),
            late: format!("shift(JTSJOL, +{JOLTS_SHIFT}) / CLF16OV"),
            anchor: None,
        });
        let mut u_chain = vec!["UNEMPLOY / CLF16OV".to_string()];
        let mut v_chain = vec![
            "HWI / CLF16OV before 2001-01".to_string(),
            format!("shift(JTSJOL, +{JOLTS_SHIFT} month) / CLF16OV from 2001-01"),
        ];

        if options.scope == Scope::Full {
            let hist_u = load_source("UNRATE_HISTORICAL", &files.historical_unemployment, &mut manifest)?
                .map(|pct| pct / 100.0);
            let hist_hwi = load_source("HWI_HISTORICAL", &files.historical_help_wanted, &mut manifest)?;
            require_from("UNRATE_HISTORICAL", &hist_u, HISTORICAL_START)?;
            require_from("HWI_HISTORICAL", &hist_hwi, HISTORICAL_START)?;
            require_from("UNEMPLOY / CLF16OV", &u, CPS_CUTOVER)?;
            require_from("HWI / CLF16OV", &v, options.metlife_anchor.min(HELP_WANTED_CUTOVER))?;

            let hist_u = hist_u.slice(HISTORICAL_START, CPS_CUTOVER.pred())?;
            u = splice(&hist_u, &u, CPS_CUTOVER)?;
            manifest.splices.push(SpliceRecord {
                series: "u".into(),
                cutover: CPS_CUTOVER,
                early: "historical unemployment rate / 100".into(),
                late: "UNEMPLOY / CLF16OV".into(),
                anchor: None,
            });
            u_chain.insert(0, format!("historical rate / 100 before {CPS_CUTOVER}"));

            let rescaled = rescale_to_anchor(&hist_hwi, &v, options.metlife_anchor)?
                .slice(HISTORICAL_START, HELP_WANTED_CUTOVER.pred())?;
            v = splice(&rescaled, &v, HELP_WANTED_CUTOVER)?;
            manifest.splices.push(SpliceRecord {
                series: "v".into(),
                cutover: HELP_WANTED_CUTOVER,
                early: "historical help-wanted index rescaled".into(),
                late: "HWI / CLF16OV".into(),
                anchor: Some(options.metlife_anchor),
            });
            v_chain.insert(
                0,
                format!(
                    "historical index x (v / index at {}) before {HELP_WANTED_CUTOVER}",
                    options.metlife_anchor
                ),
            );
        }

        manifest.push_derived("u", &u, u_chain);
        manifest.push_derived("v", &v, v_chain);
        Ok(Dataset {
            scope: options.scope,
            u,
            v,
            manifest,
        })
    }

    pub fn u_bar(&self) -> MonthlySeries {
        trailing_average(&self.u, SMOOTHING_WINDOW).expect("dataset series are nonempty")
    }

    pub fn v_bar(&self) -> MonthlySeries {
        trailing_average(&self.v, SMOOTHING_WINDOW).expect("dataset series are nonempty")
    }

    pub fn indicators(&self) -> Result<IndicatorSet> {
        IndicatorSet::from_rates(&self.u, &self.v)
    }

    /// First and last months where both rates are defined.
    pub fn span(&self) -> (Month, Month) {
        let (u0, u1) = self.u.defined_range().expect("nonempty");
        let (v0, v1) = self.v.defined_range().expect("nonempty");
        (u0.max(v0), u1.min(v1))
    }

    /// Delimited table `month,u,v,u_bar,v_bar` over [`Dataset::span`].
    pub fn to_csv(&self) -> String {
        let (start, end) = self.span();
        self.to_csv_between(start, end)
    }

    /// As [`Dataset::to_csv`], restricted to `from..=to` within the span.
    pub fn to_csv_between(&self, from: Month, to: Month) -> String {
        let (first, last) = self.span();
        let (start, end) = (from.max(first), to.min(last));
        let (u_bar, v_bar) = (self.u_bar(), self.v_bar());
        let mut out = String::from("month,u,v,u_bar,v_bar\n");
        let mut month = start;
        let cell = |x: Option<f64>| x.map(|x| x.to_string()).unwrap_or_default();
        while month <= end {
            out.push_str(&format!(
                "{month},{},{},{},{}\n",
                cell(self.u.get(month)),
                cell(self.v.get(month)),
                cell(u_bar.get(month)),
                cell(v_bar.get(month)),
            ));
            month = month.succ();
        }
        out
    }
}

/// Writes `u.csv` and `v.csv` style single-series tables.
pub fn series_table(name: &str, series: &MonthlySeries) -> String {
    serialize_monthly_table(&format!("month,{name}"), series)
}
