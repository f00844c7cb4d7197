//! Tweet sources and keyword-filtered, deduplicating ingestion.
//!
//! `file_replay` reads a JSONL tweet file. `http_poll` issues `GET location`
//! against a minimal stand-in endpoint that answers with either a JSON array
//! of tweet objects or `{"tweets": [...]}`; each tweet object has the JSONL
//! record shape. Elements that do not parse or validate count as malformed.

use std::io::BufReader;
use std::time::Duration;

use chrono::{DateTime, Utc};
use needminer_core::corpus::{read_jsonl, Tweet};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::store::{StoredTweet, TweetStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    FileReplay,
    HttpPoll,
}

/// Retry policy for an unreachable source: the delay before retry `i` is
/// `initial_ms * 2^i`, capped at `max_ms`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Backoff {
    pub initial_ms: u64,
    pub max_ms: u64,
    /// Total attempts, the first included.
    pub attempts: u32,
}

impl Default for Backoff {
    fn default() -> Self {
        Backoff {
            initial_ms: 500,
            max_ms: 30_000,
            attempts: 5,
        }
    }
}

impl Backoff {
    /// Delays slept between consecutive attempts.
    pub fn delays(&self) -> Vec<Duration> {
        (0..self.attempts.saturating_sub(1))
            .map(|i| {
                let ms = self
                    .initial_ms
                    .saturating_mul(1u64.checked_shl(i).unwrap_or(u64::MAX));
                Duration::from_millis(ms.min(self.max_ms))
            })
            .collect()
    }
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// File path or URL.
    pub location: String,
    pub keywords: Vec<String>,
    #[serde(default = "one")]
    pub interval_secs: u64,
    #[serde(default)]
    pub backoff: Backoff,
}

impl SourceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.location.trim().is_empty() {
            return Err(ServiceError::Config("source location is empty".into()));
        }
        if self.keywords.iter().all(|k| k.trim().is_empty()) {
            return Err(ServiceError::Config(
                "source needs at least one keyword".into(),
            ));
        }
        if self.kind == SourceKind::HttpPoll && self.interval_secs < 1 {
            return Err(ServiceError::Config(
                "http_poll interval must be at least 1 second".into(),
            ));
        }
        if self.backoff.attempts < 1 {
            return Err(ServiceError::Config(
                "backoff needs at least one attempt".into(),
            ));
        }
        Ok(())
    }

    /// Case-insensitive substring match against any keyword.
    pub fn matches(&self, text: &str) -> bool {
        let lower = text.to_lowercase();
        self.keywords
            .iter()
            .map(|k| k.trim().to_lowercase())
            .any(|k| !k.is_empty() && lower.contains(&k))
    }
}

/// One fetch from a source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub tweets: Vec<Tweet>,
    pub malformed: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    /// Well-formed records read from the source.
    pub seen: usize,
    pub matched: usize,
    pub new: usize,
    /// Matched records already stored or repeated within the batch.
    pub duplicates: usize,
    pub malformed: usize,
}

/// Runs `op` up to `policy.attempts` times, sleeping between attempts.
pub fn with_backoff<T>(
    policy: &Backoff,
    mut sleep: impl FnMut(Duration),
    mut op: impl FnMut() -> std::result::Result<T, String>,
) -> Result<T> {
    let delays = policy.delays();
    let mut attempt = 0;
    loop {
        match op() {
            Ok(v) => return Ok(v),
            Err(message) => {
                let Some(d) = delays.get(attempt) else {
                    return Err(ServiceError::SourceUnreachable {
                        attempts: attempt as u32 + 1,
                        message,
                    });
                };
                log::warn!(
                    "source attempt {} failed: {message}; retrying in {d:?}",
                    attempt + 1
                );
                sleep(*d);
                attempt += 1;
            }
        }
    }
}

fn parse_http_body(body: &str, now: DateTime<Utc>) -> std::result::Result<Batch, String> {
    let value: serde_json::Value =
        serde_json::from_str(body).map_err(|e| format!("response is not JSON: {e}"))?;
    let items = match value {
        serde_json::Value::Array(a) => a,
        serde_json::Value::Object(mut o) => match o.remove("tweets") {
            Some(serde_json::Value::Array(a)) => a,
            _ => return Err("response object lacks a \"tweets\" array".into()),
        },
        _ => return Err("response is neither an array nor an object".into()),
    };
    let mut batch = Batch::default();
    for item in items {
        match serde_json::from_value::<Tweet>(item) {
            Ok(t) if t.validate(now).is_ok() => batch.tweets.push(t),
            _ => batch.malformed += 1,
        }
    }
    Ok(batch)
}

fn fetch_once(spec: &SourceSpec, now: DateTime<Utc>) -> std::result::Result<Batch, String> {
    match spec.kind {
        SourceKind::FileReplay => {
            let file = std::fs::File::open(&spec.location)
                .map_err(|e| format!("{}: {e}", spec.location))?;
            let (tweets, errors) = read_jsonl(BufReader::new(file), now);
            Ok(Batch {
                tweets: tweets.into_iter().map(|(_, t)| t).collect(),
                malformed: errors.len(),
            })
        }
        SourceKind::HttpPoll => {
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(30))
                .build()
                .map_err(|e| e.to_string())?;
            let resp = client
                .get(&spec.location)
                .send()
                .map_err(|e| e.to_string())?;
            let status = resp.status();
            if !status.is_success() {
                return Err(format!("{} answered {status}", spec.location));
            }
            let body = resp.text().map_err(|e| e.to_string())?;
            parse_http_body(&body, now)
        }
    }
}

/// Reads one batch, retrying with the spec's backoff.
pub fn fetch(spec: &SourceSpec) -> Result<Batch> {
    spec.validate()?;
    with_backoff(&spec.backoff, std::thread::sleep, || {
        fetch_once(spec, Utc::now())
    })
}

/// Keyword-filters and deduplicates `batch` into `store`.
pub fn ingest_batch(
    spec: &SourceSpec,
    batch: Batch,
    store: &mut dyn TweetStore,
    now: DateTime<Utc>,
) -> Result<IngestReport> {
    let mut report = IngestReport {
        seen: batch.tweets.len(),
        malformed: batch.malformed,
        ..Default::default()
    };
    let mut fresh = Vec::new();
    let mut batch_ids = std::collections::HashSet::new();
    for t in batch.tweets {
        if !spec.matches(&t.text) {
            continue;
        }
        report.matched += 1;
        if store.contains(&t.id) || !batch_ids.insert(t.id.clone()) {
            report.duplicates += 1;
            continue;
        }
        fresh.push(StoredTweet::raw(t, now));
    }
    report.new = store.insert(fresh)?;
    Ok(report)
}

pub fn ingest(spec: &SourceSpec, store: &mut dyn TweetStore) -> Result<IngestReport> {
    let batch = fetch(spec)?;
    ingest_batch(spec, batch, store, Utc::now())
}
