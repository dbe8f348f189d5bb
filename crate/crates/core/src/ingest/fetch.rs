//! Optional refresh path: downloads series observations from a FRED-style
//! HTTP endpoint into a local cache. Offline mode only reads the cache.
//!
//! Cache layout: one `<SERIES_ID>.csv` table per series plus `manifest.json`
//! with the retrieval timestamp and SHA-256 of each cached file. Files are
//! written to a temporary name and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::dataset::sha256_hex;
use crate::ingest::table::{parse_monthly_table, serialize_monthly_table};
use crate::timeseries::{Month, MonthlySeries};

pub const DEFAULT_BASE_URL: &str = "https://api.stlouisfed.org/fred";
/// Series behind the modern dataset.
pub const MODERN_SERIES: [&str; 3] = ["UNEMPLOY", "CLF16OV", "JTSJOL"];

#[derive(Debug, Clone)]
pub struct FetchConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub cache_dir: PathBuf,
    pub offline: bool,
    pub max_attempts: u32,
    pub backoff: Duration,
    pub timeout: Duration,
}

impl FetchConfig {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        FetchConfig {
            base_url: DEFAULT_BASE_URL.to_string(),
            api_key: None,
            cache_dir: cache_dir.into(),
            offline: false,
            max_attempts: 3,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub file: String,
    pub retrieved: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheManifest {
    pub entries: BTreeMap<String, CacheEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchedTable {
    pub series_id: String,
    /// Canonical `month,<ID>` table text.
    pub content: String,
    pub from_cache: bool,
    pub retrieved: String,
}

impl FetchedTable {
    pub fn series(&self) -> Result<MonthlySeries> {
        parse_monthly_table(&self.content)
    }
}

#[derive(Deserialize)]
struct ObservationsPayload {
    observations: Vec<Observation>,
}

#[derive(Deserialize)]
struct Observation {
    date: String,
    value: String,
}

#[derive(Deserialize)]
struct ErrorPayload {
    error_message: Option<String>,
}

/// Converts an observations payload into a canonical monthly table.
pub fn observations_to_table(series_id: &str, body: &str) -> Result<String> {
    let payload: ObservationsPayload =
        serde_json::from_str(body).map_err(|e| Error::Payload(format!("{series_id}: {e}")))?;
    let mut start = None;
    let mut values = Vec::with_capacity(payload.observations.len());
    let mut expected: Option<Month> = None;
    for obs in &payload.observations {
        let month: Month = obs
            .date
            .parse()
            .map_err(|_| Error::Payload(format!("{series_id}: bad date {:?}", obs.date)))?;
        if let Some(next) = expected {
            if month != next {
                return Err(Error::Payload(format!("{series_id}: expected {next}, got {month}")));
            }
        }
        start.get_or_insert(month);
        expected = Some(month.succ());
        values.push(match obs.value.trim() {
            "." | "" => None,
            v => Some(
                v.parse::<f64>()
                    .map_err(|_| Error::Payload(format!("{series_id}: bad value {v:?} at {month}")))?,
            ),
        });
    }
    let start = start.ok_or_else(|| Error::Payload(format!("{series_id}: no observations")))?;
    let series = MonthlySeries::from_options(start, values)
        .map_err(|e| Error::Payload(format!("{series_id}: {e}")))?;
    Ok(serialize_monthly_table(&format!("month,{series_id}"), &series))
}

fn valid_series_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub struct RemoteFetcher {
    config: FetchConfig,
    agent: ureq::Agent,
}

impl RemoteFetcher {
    pub fn new(config: FetchConfig) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(config.timeout).build();
        RemoteFetcher { config, agent }
    }

    pub fn config(&self) -> &FetchConfig {
        &self.config
    }

    fn manifest_path(&self) -> PathBuf {
        self.config.cache_dir.join("manifest.json")
    }

    pub fn cache_manifest(&self) -> Result<CacheManifest> {
        let path = self.manifest_path();
        if !path.exists() {
            return Ok(CacheManifest::default());
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Payload(format!("{}: {e}", path.display())))
    }

    fn cached(&self, series_id: &str) -> Result<Option<FetchedTable>> {
        let manifest = self.cache_manifest()?;
        let Some(entry) = manifest.entries.get(series_id) else {
            return Ok(None);
        };
        let path = self.config.cache_dir.join(&entry.file);
        let content = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        if sha256_hex(content.as_bytes()) != entry.sha256 {
            return Err(Error::Payload(format!("{}: checksum mismatch", path.display())));
        }
        Ok(Some(FetchedTable {
            series_id: series_id.to_string(),
            content,
            from_cache: true,
            retrieved: entry.retrieved.clone(),
        }))
    }

    /// Returns the series table, from the cache in offline mode and from the
    /// endpoint otherwise. Successful downloads refresh the cache.
    pub fn fetch(&self, series_id: &str) -> Result<FetchedTable> {
        if !valid_series_id(series_id) {
            return Err(Error::Config(format!("invalid series id {series_id:?}")));
        }
        if self.config.offline {
            return self.cached(series_id)?.ok_or_else(|| {
                Error::Config(format!(
                    "{series_id} is not in the cache at {} (offline mode)",
                    self.config.cache_dir.display()
                ))
            });
        }
        let key = self
            .config
            .api_key
            .as_deref()
            .filter(|k| !k.is_empty())
            .ok_or_else(|| Error::Config("no API key configured".into()))?;
        let body = self.download(series_id, key)?;
        let content = observations_to_table(series_id, &body)?;
        let retrieved = chrono::Utc::now().format("%Y-%m-%dT%H:%M:%SZ").to_string();
        self.store(series_id, &content, &retrieved)?;
        Ok(FetchedTable {
            series_id: series_id.to_string(),
            content,
            from_cache: false,
            retrieved,
        })
    }

    fn download(&self, series_id: &str, key: &str) -> Result<String> {
        let url = format!("{}/series/observations", self.config.base_url.trim_end_matches('/'));
        let mut last_error = String::new();
        for attempt in 0..self.config.max_attempts.max(1) {
            if attempt > 0 {
                thread::sleep(self.config.backoff * 2u32.pow(attempt - 1));
            }
            let request = self
                .agent
                .get(&url)
                .query("series_id", series_id)
                .query("api_key", key)
                .query("file_type", "json");
            match request.call() {
                Ok(response) => {
                    return response
                        .into_string()
                        .map_err(|e| Error::Payload(format!("{series_id}: {e}")))
                }
                Err(ureq::Error::Status(code, response)) if (400..500).contains(&code) => {
                    let detail = response
                        .into_string()
                        .ok()
                        .and_then(|b| serde_json::from_str::<ErrorPayload>(&b).ok())
                        .and_then(|p| p.error_message)
                        .unwrap_or_default();
                    return Err(Error::Config(format!(
                        "{series_id}: request rejected with status {code} {detail}"
                    )
                    .trim_end()
                    .to_string()));
                }
                Err(ureq::Error::Status(code, _)) => last_error = format!("status {code}"),
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(Error::Http(format!(
            "{series_id}: {last_error} after {} attempts",
            self.config.max_attempts.max(1)
        )))
    }

    fn store(&self, series_id: &str, content: &str, retrieved: &str) -> Result<()> {
        let dir = &self.config.cache_dir;
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let file = format!("{series_id}.csv");
        write_atomic(&dir.join(&file), content.as_bytes())?;
        let mut manifest = self.cache_manifest()?;
        manifest.entries.insert(
            series_id.to_string(),
            CacheEntry {
                file,
                retrieved: retrieved.to_string(),
                sha256: sha256_hex(content.as_bytes()),
            },
        );
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&self.manifest_path(), json.as_bytes())
    }
}
