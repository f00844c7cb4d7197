//! Tweet persistence: an append-only JSONL record log next to a compacted
//! snapshot, both replayed into an in-memory index on open.
//!
//! Every log line is a full [`StoredTweet`]; a later line for the same id
//! replaces the earlier one. A torn final line (a crash mid-append) is
//! skipped with a warning. Compaction writes the snapshot through a
//! temporary file and a rename, then truncates the log.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, Utc};
use needminer_core::corpus::Tweet;
use needminer_core::enrich::{Gender, Sentiment};
use needminer_core::needcat::{CategoryAssignment, NeedCategory};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::registry::ModelVersions;

pub const SNAPSHOT_FILE: &str = "snapshot.jsonl";
pub const LOG_FILE: &str = "log.jsonl";
pub const DEFAULT_COMPACT_EVERY: usize = 10_000;

/// Classifier and enricher output for one tweet, produced from a single
/// set of model versions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub need_score: f64,
    pub is_need: bool,
    /// Need threshold in force when the tweet was classified.
    pub threshold: f64,
    /// Present when `is_need`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<CategoryAssignment>,
    /// Category model scores for every tweet, so a later, lower threshold
    /// can still assign categories without rerunning the models.
    #[serde(default)]
    pub category_scores: BTreeMap<NeedCategory, f64>,
    pub sentiment: Sentiment,
    pub gender: Gender,
    pub versions: ModelVersions,
    pub processed_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredTweet {
    pub tweet: Tweet,
    pub ingested_at: DateTime<Utc>,
    /// `None` until the orchestrator has processed the tweet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<Annotation>,
}

impl StoredTweet {
    pub fn raw(tweet: Tweet, ingested_at: DateTime<Utc>) -> Self {
        StoredTweet {
            tweet,
            ingested_at,
            annotation: None,
        }
    }
}

/// The database handler. One writer at a time; readers take snapshots.
pub trait TweetStore: Send {
    fn contains(&self, id: &str) -> bool;

    /// Stores tweets whose ids are not yet present and returns how many
    /// that was.
    fn insert(&mut self, tweets: Vec<StoredTweet>) -> Result<usize>;

    /// Replaces the stored record with the same id.
    fn update(&mut self, tweet: StoredTweet) -> Result<()>;

    /// An immutable view in insertion order. Later writes do not affect it.
    fn snapshot(&self) -> Arc<Vec<StoredTweet>>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct MemoryStore {
    records: Arc<Vec<StoredTweet>>,
    index: HashMap<String, usize>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces; returns whether the id was new.
    fn upsert(&mut self, t: StoredTweet) -> bool {
        let records = Arc::make_mut(&mut self.records);
        match self.index.get(&t.tweet.id) {
            Some(&i) => {
                records[i] = t;
                false
            }
            None => {
                self.index.insert(t.tweet.id.clone(), records.len());
                records.push(t);
                true
            }
        }
    }
}

impl TweetStore for MemoryStore {
    fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    fn insert(&mut self, tweets: Vec<StoredTweet>) -> Result<usize> {
        let mut added = 0;
        for t in tweets {
            if !self.contains(&t.tweet.id) {
                self.upsert(t);
                added += 1;
            }
        }
        Ok(added)
    }

    fn update(&mut self, tweet: StoredTweet) -> Result<()> {
        if !self.contains(&tweet.tweet.id) {
            return Err(ServiceError::Query(format!(
                "unknown tweet {}",
                tweet.tweet.id
            )));
        }
        self.upsert(tweet);
        Ok(())
    }

    fn snapshot(&self) -> Arc<Vec<StoredTweet>> {
        self.records.clone()
    }

    fn len(&self) -> usize {
        self.records.len()
    }
}

/// File-backed store rooted at a directory.
#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    mem: MemoryStore,
    log: BufWriter<File>,
    log_records: usize,
    compact_every: usize,
}

fn read_records(path: &Path, tolerate_torn_tail: bool) -> Result<Vec<StoredTweet>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(ServiceError::io(path, e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| ServiceError::io(path, e))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<StoredTweet>(line) {
            Ok(t) => out.push(t),
            Err(e) if tolerate_torn_tail && Some(i) == last => {
                log::warn!(
                    "{}: skipping torn record on line {}: {e}",
                    path.display(),
                    i + 1
                );
            }
            Err(e) => {
                return Err(ServiceError::CorruptStore {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}

impl FileStore {
    /// Opens (creating if needed) the store in `dir`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        Self::open_with(dir, DEFAULT_COMPACT_EVERY)
    }

    /// As [`FileStore::open`], compacting whenever the log holds
    /// `compact_every` records.
    pub fn open_with(dir: impl AsRef<Path>, compact_every: usize) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| ServiceError::io(&dir, e))?;
        let mut mem = MemoryStore::new();
        for t in read_records(&dir.join(SNAPSHOT_FILE), false)? {
            mem.upsert(t);
        }
        let logged = read_records(&dir.join(LOG_FILE), true)?;
        let log_records = logged.len();
        for t in logged {
            mem.upsert(t);
        }
        let log_path = dir.join(LOG_FILE);
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| ServiceError::io(&log_path, e))?;
        let mut store = FileStore {
            dir,
            mem,
            log: BufWriter::new(file),
            log_records,
            compact_every: compact_every.max(1),
        };
        // a torn tail must not end up in front of the next append
        let log_bytes = std::fs::metadata(&log_path)
            .map_err(|e| ServiceError::io(&log_path, e))?
            .len();
        if log_bytes > 0 {
            store.compact()?;
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn append(&mut self, records: &[&StoredTweet]) -> Result<()> {
        let path = self.dir.join(LOG_FILE);
        for r in records {
            let line = serde_json::to_string(r).expect("stored tweets serialize");
            writeln!(self.log, "{line}").map_err(|e| ServiceError::io(&path, e))?;
        }
        self.log.flush().map_err(|e| ServiceError::io(&path, e))?;
        self.log_records += records.len();
        Ok(())
    }

    /// Call once the in-memory index reflects everything logged.
    fn maybe_compact(&mut self) -> Result<()> {
        if self.log_records >= self.compact_every {
            self.compact()?;
        }
        Ok(())
    }

    /// Folds the log into a fresh snapshot.
    pub fn compact(&mut self) -> Result<()> {
        let snap = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        {
            let file = File::create(&tmp).map_err(|e| ServiceError::io(&tmp, e))?;
            let mut w = BufWriter::new(file);
            for r in self.mem.records.iter() {
                let line = serde_json::to_string(r).expect("stored tweets serialize");
                writeln!(w, "{line}").map_err(|e| ServiceError::io(&tmp, e))?;
            }
            let file = w
                .into_inner()
                .map_err(|e| ServiceError::io(&tmp, e.into_error()))?;
            file.sync_all().map_err(|e| ServiceError::io(&tmp, e))?;
        }
        std::fs::rename(&tmp, &snap).map_err(|e| ServiceError::io(&snap, e))?;
        let log_path = self.dir.join(LOG_FILE);
        self.log
            .flush()
            .map_err(|e| ServiceError::io(&log_path, e))?;
        self.log
            .get_ref()
            .set_len(0)
            .map_err(|e| ServiceError::io(&log_path, e))?;
        self.log_records = 0;
        Ok(())
    }
}

impl TweetStore for FileStore {
    fn contains(&self, id: &str) -> bool {
        self.mem.contains(id)
    }

    fn insert(&mut self, tweets: Vec<StoredTweet>) -> Result<usize> {
        let mut fresh: Vec<StoredTweet> = Vec::new();
        let mut ids = std::collections::HashSet::new();
        for t in tweets {
            if !self.mem.contains(&t.tweet.id) && ids.insert(t.tweet.id.clone()) {
                fresh.push(t);
            }
        }
        self.append(&fresh.iter().collect::<Vec<_>>())?;
        let n = fresh.len();
        for t in fresh {
            self.mem.upsert(t);
        }
        self.maybe_compact()?;
        Ok(n)
    }

    fn update(&mut self, tweet: StoredTweet) -> Result<()> {
        if !self.mem.contains(&tweet.tweet.id) {
            return Err(ServiceError::Query(format!(
                "unknown tweet {}",
                tweet.tweet.id
            )));
        }
        self.append(&[&tweet])?;
        self.mem.upsert(tweet);
        self.maybe_compact()
    }

    fn snapshot(&self) -> Arc<Vec<StoredTweet>> {
        self.mem.snapshot()
    }

    fn len(&self) -> usize {
        self.mem.len()
    }
}
