//! Run configuration, layered as flags > config file > environment > defaults.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::Deserialize;

use recession_core::backtest::BacktestConfig;
use recession_core::rules::{Crossing, MINIMUM_RULE_THRESHOLD, SAHM_THRESHOLD};
use recession_core::{Month, TwoSidedRule};

pub const ENV_PREFIX: &str = "RECESSION_";
pub const API_KEY_ENV: &str = "FRED_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Table,
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

/// One configuration layer. Thresholds are in percentage points.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Settings {
    pub data_dir: Option<PathBuf>,
    pub start: Option<Month>,
    pub end: Option<Month>,
    pub format: Option<Format>,
    pub rule_low: Option<f64>,
    pub rule_high: Option<f64>,
    pub threshold: Option<f64>,
    pub sahm_threshold: Option<f64>,
    pub early_window: Option<u32>,
    pub offline: Option<bool>,
    pub strict: Option<bool>,
    pub api_key: Option<String>,
    pub base_url: Option<String>,
    pub cache_dir: Option<PathBuf>,
}

impl Settings {
    /// Fields set in `self` win over those in `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        Settings {
            data_dir: self.data_dir.or(lower.data_dir),
            start: self.start.or(lower.start),
            end: self.end.or(lower.end),
            format: self.format.or(lower.format),
            rule_low: self.rule_low.or(lower.rule_low),
            rule_high: self.rule_high.or(lower.rule_high),
            threshold: self.threshold.or(lower.threshold),
            sahm_threshold: self.sahm_threshold.or(lower.sahm_threshold),
            early_window: self.early_window.or(lower.early_window),
            offline: self.offline.or(lower.offline),
            strict: self.strict.or(lower.strict),
            api_key: self.api_key.or(lower.api_key),
            base_url: self.base_url.or(lower.base_url),
            cache_dir: self.cache_dir.or(lower.cache_dir),
        }
    }

    pub fn from_file(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Reads `RECESSION_*` variables (and the API key variable) through `get`.
    pub fn from_env(get: impl Fn(&str) -> Option<String>) -> Result<Settings> {
        fn parse<T: FromStr>(get: &impl Fn(&str) -> Option<String>, key: &str) -> Result<Option<T>>
        where
            T::Err: std::fmt::Display,
        {
            let name = format!("{ENV_PREFIX}{key}");
            match get(&name).filter(|v| !v.is_empty()) {
                None => Ok(None),
                Some(v) => v
                    .parse()
                    .map(Some)
                    .map_err(|e| anyhow::anyhow!("environment variable {name}={v:?}: {e}")),
            }
        }
        Ok(Settings {
            data_dir: parse(&get, "DATA_DIR")?,
            start: parse(&get, "START")?,
            end: parse(&get, "END")?,
            format: parse(&get, "FORMAT")?,
            rule_low: parse(&get, "RULE_LOW")?,
            rule_high: parse(&get, "RULE_HIGH")?,
            threshold: parse(&get, "THRESHOLD")?,
            sahm_threshold: parse(&get, "SAHM_THRESHOLD")?,
            early_window: parse(&get, "EARLY_WINDOW")?,
            offline: parse(&get, "OFFLINE")?,
            strict: parse(&get, "STRICT")?,
            api_key: get(API_KEY_ENV).filter(|v| !v.is_empty()),
            base_url: parse(&get, "BASE_URL")?,
            cache_dir: parse(&get, "CACHE_DIR")?,
        })
    }
}

/// Fully resolved configuration. Thresholds are fractions.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub start: Option<Month>,
    pub end: Option<Month>,
    pub format: Format,
    pub rule: TwoSidedRule,
    pub threshold: f64,
    pub sahm_threshold: f64,
    pub early_window: u32,
    pub crossing: Crossing,
    pub offline: bool,
    pub api_key: Option<String>,
    pub base_url: Option<String>,
    pub cache_dir: Option<PathBuf>,
}

fn positive_pp(name: &str, value: f64) -> Result<f64> {
    if !(value > 0.0 && value.is_finite()) {
        bail!("{name} must be a positive number of percentage points, got {value}");
    }
    Ok(value / 100.0)
}

impl RunConfig {
    pub fn resolve(settings: Settings) -> Result<RunConfig> {
        let default_rule = TwoSidedRule::MODERN;
        let low = positive_pp("rule-low", settings.rule_low.unwrap_or(default_rule.low() * 100.0))?;
        let high = positive_pp("rule-high", settings.rule_high.unwrap_or(default_rule.high() * 100.0))?;
        let rule = TwoSidedRule::new(low, high).context("rule-low must be below rule-high")?;
        if let (Some(start), Some(end)) = (settings.start, settings.end) {
            if start > end {
                bail!("start {start} is after end {end}");
            }
        }
        Ok(RunConfig {
            data_dir: settings.data_dir.unwrap_or_else(|| PathBuf::from("data")),
            start: settings.start,
            end: settings.end,
            format: settings.format.unwrap_or_default(),
            rule,
            threshold: positive_pp("threshold", settings.threshold.unwrap_or(MINIMUM_RULE_THRESHOLD * 100.0))?,
            sahm_threshold: positive_pp(
                "sahm-threshold",
                settings.sahm_threshold.unwrap_or(SAHM_THRESHOLD * 100.0),
            )?,
            early_window: settings.early_window.unwrap_or(BacktestConfig::DEFAULT_EARLY_WINDOW),
            crossing: if settings.strict.unwrap_or(false) {
                Crossing::StrictlyAbove
            } else {
                Crossing::AtOrAbove
            },
            offline: settings.offline.unwrap_or(false),
            api_key: settings.api_key,
            base_url: settings.base_url,
            cache_dir: settings.cache_dir,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let pairs: Vec<(String, String)> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |key| pairs.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone())
    }

    #[test]
    fn precedence_flags_file_env_defaults() {
        let flags = Settings {
            rule_low: Some(0.2),
            ..Settings::default()
        };
        let file: Settings = toml::from_str("rule-low = 0.25\nrule-high = 0.7\nformat = \"json\"").unwrap();
        let environment = Settings::from_env(env(&[
            ("RECESSION_RULE_HIGH", "0.6"),
            ("RECESSION_EARLY_WINDOW", "5"),
            ("RECESSION_FORMAT", "csv"),
        ]))
        .unwrap();
        let config = RunConfig::resolve(flags.over(file.over(environment))).unwrap();
        assert!((config.rule.low() - 0.002).abs() < 1e-15);
        assert!((config.rule.high() - 0.007).abs() < 1e-15);
        assert_eq!(config.format, Format::Json);
        assert_eq!(config.early_window, 5);
        assert!((config.threshold - 0.003).abs() < 1e-15);
    }

    #[test]
    fn invalid_values_are_rejected() {
        let bad = |s: Settings| RunConfig::resolve(s).is_err();
        assert!(bad(Settings {
            rule_low: Some(0.9),
            ..Settings::default()
        }));
        assert!(bad(Settings {
            threshold: Some(-0.1),
            ..Settings::default()
        }));
        assert!(bad(Settings {
            start: Some("2020-01".parse().unwrap()),
            end: Some("2019-01".parse().unwrap()),
            ..Settings::default()
        }));
        assert!(Settings::from_env(env(&[("RECESSION_START", "1960-13")])).is_err());
        assert!(toml::from_str::<Settings>("unknown = 1").is_err());
    }
}
