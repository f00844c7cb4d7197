//! Tweet ingestion, noise filtering, rater-label aggregation and stratified
//! splitting.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use rand::seq::SliceRandom;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeds;

/// One ingested short-text post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    #[serde(default = "undetermined_lang")]
    pub lang: String,
    pub created_at: DateTime<Utc>,
    #[serde(default)]
    pub author_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain_tag: Option<String>,
}

fn undetermined_lang() -> String {
    "und".to_string()
}

/// Texts longer than this are rejected at load time.
pub const MAX_TEXT_CHARS: usize = 280;

impl Tweet {
    /// Checks the record-level invariants against the ingestion clock `now`.
    pub fn validate(&self, now: DateTime<Utc>) -> std::result::Result<(), String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.text.trim().is_empty() {
            return Err(format!("tweet {}: empty text", self.id));
        }
        if self.text.chars().count() > MAX_TEXT_CHARS {
            return Err(format!(
                "tweet {}: text longer than {MAX_TEXT_CHARS} characters",
                self.id
            ));
        }
        if self.created_at > now {
            return Err(format!(
                "tweet {}: created_at {} lies in the future",
                self.id, self.created_at
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaterLabel {
    Need,
    NoNeed,
}

/// One rater's judgement of one tweet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub tweet_id: String,
    pub labeler_id: String,
    pub label: RaterLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Need,
    NoNeed,
    Suspended,
}

impl Verdict {
    /// Consensus rule over three raters: two or more votes make a need,
    /// zero votes make a non-need, a single vote is a disagreement.
    pub fn from_votes(votes_need: u8) -> Verdict {
        match votes_need {
            0 => Verdict::NoNeed,
            1 => Verdict::Suspended,
            _ => Verdict::Need,
        }
    }

    /// Training label, `None` for suspended tweets.
    pub fn as_class(self) -> Option<bool> {
        match self {
            Verdict::Need => Some(true),
            Verdict::NoNeed => Some(false),
            Verdict::Suspended => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregatedLabel {
    pub tweet_id: String,
    pub verdict: Verdict,
    pub votes_need: u8,
}

/// A problem with a single input record; loading continues past it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Corpus {
    pub tweets: Vec<Tweet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<AggregatedLabel>>,
    #[serde(default)]
    pub provenance: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PartitionCounts {
    pub need: usize,
    pub no_need: usize,
    pub suspended: usize,
}

impl PartitionCounts {
    pub fn total(&self) -> usize {
        self.need + self.no_need + self.suspended
    }
}

impl Corpus {
    pub fn new(tweets: Vec<Tweet>, provenance: impl Into<String>) -> Self {
        Corpus {
            tweets,
            labels: None,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Attaches aggregated labels. Every label must resolve to a tweet.
    pub fn with_labels(mut self, labels: Vec<AggregatedLabel>) -> Result<Self> {
        let ids: HashSet<&str> = self.tweets.iter().map(|t| t.id.as_str()).collect();
        let dangling: Vec<&str> = labels
            .iter()
            .map(|l| l.tweet_id.as_str())
            .filter(|id| !ids.contains(id))
            .collect();
        if !dangling.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{} label(s) reference unknown tweets, first: {}",
                dangling.len(),
                dangling[0]
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn partition_counts(&self) -> PartitionCounts {
        let mut counts = PartitionCounts::default();
        for label in self.labels.iter().flatten() {
            match label.verdict {
                Verdict::Need => counts.need += 1,
                Verdict::NoNeed => counts.no_need += 1,
                Verdict::Suspended => counts.suspended += 1,
            }
        }
        counts
    }

    /// Tweets with a Need/NoNeed verdict, in corpus order. Suspended and
    /// unlabeled tweets are left out.
    pub fn labeled(&self) -> Vec<(&Tweet, bool)> {
        let Some(labels) = &self.labels else {
            return Vec::new();
        };
        let verdicts: HashMap<&str, Verdict> = labels
            .iter()
            .map(|l| (l.tweet_id.as_str(), l.verdict))
            .collect();
        self.tweets
            .iter()
            .filter_map(|t| {
                verdicts
                    .get(t.id.as_str())
                    .and_then(|v| v.as_class())
                    .map(|c| (t, c))
            })
            .collect()
    }

    fn retain_ids(&self, keep: &HashSet<&str>) -> Corpus {
        let tweets = self
            .tweets
            .iter()
            .filter(|t| keep.contains(t.id.as_str()))
            .cloned()
            .collect();
        let labels = self.labels.as_ref().map(|ls| {
            ls.iter()
                .filter(|l| keep.contains(l.tweet_id.as_str()))
                .cloned()
                .collect()
        });
        Corpus {
            tweets,
            labels,
            provenance: self.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TweetFormat {
    Jsonl,
    Csv,
}

/// Result of a load: the accepted corpus plus every rejected record.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub corpus: Corpus,
    pub rejected: Vec<RecordError>,
}

/// Parses JSONL tweets. Duplicate ids are not checked here.
pub fn read_jsonl<R: BufRead>(
    reader: R,
    now: DateTime<Utc>,
) -> (Vec<(usize, Tweet)>, Vec<RecordError>) {
    let mut tweets = Vec::new();
    let mut errors = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                errors.push(RecordError {
                    line: line_no,
                    message: e.to_string(),
                });
                continue;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Tweet>(&line) {
            Ok(t) => match t.validate(now) {
                Ok(()) => tweets.push((line_no, t)),
                Err(message) => errors.push(RecordError {
                    line: line_no,
                    message,
                }),
            },
            Err(e) => errors.push(RecordError {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    (tweets, errors)
}

#[derive(Debug, Deserialize)]
struct CsvTweet {
    id: String,
    text: String,
    #[serde(default)]
    lang: Option<String>,
    created_at: String,
    #[serde(default)]
    author_id: Option<String>,
    #[serde(default)]
    author_name: Option<String>,
    #[serde(default)]
    domain_tag: Option<String>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|v| !v.trim().is_empty())
}

fn read_csv<R: std::io::Read>(
    reader: R,
    now: DateTime<Utc>,
) -> (Vec<(usize, Tweet)>, Vec<RecordError>) {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut tweets = Vec::new();
    let mut errors = Vec::new();
    let headers = match rdr.headers() {
        Ok(h) => h.clone(),
        Err(e) => {
            errors.push(RecordError {
                line: 1,
                message: e.to_string(),
            });
            return (tweets, errors);
        }
    };
    for result in rdr.records() {
        let (line, parsed) = match result {
            Ok(raw) => {
                let line = raw.position().map(|p| p.line() as usize).unwrap_or(0);
                (line, raw.deserialize::<CsvTweet>(Some(&headers)))
            }
            Err(e) => (e.position().map(|p| p.line() as usize).unwrap_or(0), Err(e)),
        };
        let record = match parsed {
            Ok(r) => r,
            Err(e) => {
                errors.push(RecordError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let created_at = match DateTime::parse_from_rfc3339(&record.created_at) {
            Ok(ts) => ts.with_timezone(&Utc),
            Err(e) => {
                errors.push(RecordError {
                    line,
                    message: format!("created_at: {e}"),
                });
                continue;
            }
        };
        let tweet = Tweet {
            id: record.id,
            text: record.text,
            lang: non_empty(record.lang).unwrap_or_else(undetermined_lang),
            created_at,
            author_id: record.author_id.unwrap_or_default(),
            author_name: non_empty(record.author_name),
            domain_tag: non_empty(record.domain_tag),
        };
        match tweet.validate(now) {
            Ok(()) => tweets.push((line, tweet)),
            Err(message) => errors.push(RecordError { line, message }),
        }
    }
    (tweets, errors)
}

/// Loads a tweet file. Malformed records and duplicate ids are reported
/// per line; only an unreadable file is fatal.
pub fn load_tweets(path: impl AsRef<Path>, format: TweetFormat) -> Result<Loaded> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let now = Utc::now();
    let (parsed, mut rejected) = match format {
        TweetFormat::Jsonl => read_jsonl(BufReader::new(file), now),
        TweetFormat::Csv => read_csv(file, now),
    };
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    let mut tweets = Vec::with_capacity(parsed.len());
    for (line, tweet) in parsed {
        if let Some(first) = first_seen.get(&tweet.id) {
            rejected.push(RecordError {
                line,
                message: format!("duplicate id {} (first seen on line {first})", tweet.id),
            });
            continue;
        }
        first_seen.insert(tweet.id.clone(), line);
        tweets.push(tweet);
    }
    rejected.sort_by_key(|e| e.line);
    Ok(Loaded {
        corpus: Corpus::new(tweets, path.display().to_string()),
        rejected,
    })
}

#[derive(Debug, Deserialize)]
struct CsvLabel {
    tweet_id: String,
    labeler_id: String,
    label: String,
}

/// Reads a `tweet_id,labeler_id,label` file; label tokens are exactly
/// `need` / `no_need`.
pub fn load_label_records(path: impl AsRef<Path>) -> Result<(Vec<LabelRecord>, Vec<RecordError>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut records = Vec::new();
    let mut errors = Vec::new();
    for (idx, result) in rdr.deserialize::<CsvLabel>().enumerate() {
        let line = idx + 2;
        match result {
            Ok(r) => {
                let label = match r.label.as_str() {
                    "need" => RaterLabel::Need,
                    "no_need" => RaterLabel::NoNeed,
                    other => {
                        errors.push(RecordError {
                            line,
                            message: format!("unknown label token {other:?}"),
                        });
                        continue;
                    }
                };
                records.push(LabelRecord {
                    tweet_id: r.tweet_id,
                    labeler_id: r.labeler_id,
                    label,
                });
            }
            Err(e) => errors.push(RecordError {
                line,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, errors))
}

pub fn write_label_records<W: std::io::Write>(writer: W, records: &[LabelRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let to_io = |e: csv::Error| Error::InvalidInput(e.to_string());
    wtr.write_record(["tweet_id", "labeler_id", "label"])
        .map_err(to_io)?;
    for r in records {
        let label = match r.label {
            RaterLabel::Need => "need",
            RaterLabel::NoNeed => "no_need",
        };
        wtr.write_record([r.tweet_id.as_str(), r.labeler_id.as_str(), label])
            .map_err(to_io)?;
    }
    wtr.flush().map_err(|e| Error::io("<label writer>", e))?;
    Ok(())
}

pub const RATERS_PER_TWEET: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Unaggregatable {
    pub tweet_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Aggregation {
    pub labels: Vec<AggregatedLabel>,
    pub unaggregatable: Vec<Unaggregatable>,
}

/// Folds rater records into consensus verdicts, in first-appearance order of
/// tweet ids. Tweets without exactly three distinct raters are set aside.
pub fn aggregate_labels(records: &[LabelRecord]) -> Aggregation {
    let mut order: Vec<&str> = Vec::new();
    let mut by_tweet: HashMap<&str, Vec<&LabelRecord>> = HashMap::new();
    for r in records {
        by_tweet
            .entry(r.tweet_id.as_str())
            .or_insert_with(|| {
                order.push(r.tweet_id.as_str());
                Vec::new()
            })
            .push(r);
    }
    let mut out = Aggregation::default();
    for id in order {
        let group = &by_tweet[id];
        let raters: HashSet<&str> = group.iter().map(|r| r.labeler_id.as_str()).collect();
        if raters.len() != group.len() {
            out.unaggregatable.push(Unaggregatable {
                tweet_id: id.to_string(),
                reason: "a labeler rated this tweet more than once".into(),
            });
            continue;
        }
        if group.len() != RATERS_PER_TWEET {
            out.unaggregatable.push(Unaggregatable {
                tweet_id: id.to_string(),
                reason: format!("{} label records, expected {RATERS_PER_TWEET}", group.len()),
            });
            continue;
        }
        let votes_need = group.iter().filter(|r| r.label == RaterLabel::Need).count() as u8;
        out.labels.push(AggregatedLabel {
            tweet_id: id.to_string(),
            verdict: Verdict::from_votes(votes_need),
            votes_need,
        });
    }
    out
}

/// Noise rules. Each enabled rule removes the tweets it matches; a tweet
/// matched by several rules is attributed to the first in
/// [`FilterRule::ORDER`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterRules {
    pub drop_urls: bool,
    pub drop_retweets: bool,
    /// Authors posting more than this many tweets on one UTC day are treated
    /// as bots for that day.
    pub max_posts_per_author_day: Option<usize>,
    pub author_blocklist: HashSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterRule {
    Blocklist,
    Url,
    Retweet,
    AuthorRate,
}

impl FilterRule {
    pub const ORDER: [FilterRule; 4] = [
        FilterRule::Blocklist,
        FilterRule::Url,
        FilterRule::Retweet,
        FilterRule::AuthorRate,
    ];
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub removed: std::collections::BTreeMap<FilterRule, usize>,
}

static URL_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)https?://|www\.").unwrap());
static RETWEET_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*RT\s+@").unwrap());

pub fn contains_url(text: &str) -> bool {
    URL_RE.is_match(text)
}

pub fn is_retweet(text: &str) -> bool {
    RETWEET_RE.is_match(text)
}

pub fn filter_corpus(corpus: &Corpus, rules: &FilterRules) -> (Corpus, FilterReport) {
    let mut per_author_day: HashMap<(&str, chrono::NaiveDate), usize> = HashMap::new();
    if rules.max_posts_per_author_day.is_some() {
        for t in &corpus.tweets {
            *per_author_day
                .entry((t.author_id.as_str(), t.created_at.date_naive()))
                .or_default() += 1;
        }
    }
    let mut report = FilterReport {
        input: corpus.len(),
        ..Default::default()
    };
    let mut keep = HashSet::new();
    for t in &corpus.tweets {
        let hit = FilterRule::ORDER.into_iter().find(|rule| match rule {
            FilterRule::Blocklist => rules.author_blocklist.contains(&t.author_id),
            FilterRule::Url => rules.drop_urls && contains_url(&t.text),
            FilterRule::Retweet => rules.drop_retweets && is_retweet(&t.text),
            FilterRule::AuthorRate => rules.max_posts_per_author_day.is_some_and(|cap| {
                per_author_day[&(t.author_id.as_str(), t.created_at.date_naive())] > cap
            }),
        });
        match hit {
            Some(rule) => *report.removed.entry(rule).or_default() += 1,
            None => {
                keep.insert(t.id.as_str());
            }
        }
    }
    report.kept = keep.len();
    (corpus.retain_ids(&keep), report)
}

/// Deterministic uniform subsample of `n` tweets, preserving corpus order.
pub fn subsample(corpus: &Corpus, n: usize, seed: u64) -> Corpus {
    if n >= corpus.len() {
        return corpus.clone();
    }
    let mut idx: Vec<usize> = (0..corpus.len()).collect();
    idx.shuffle(&mut seeds::rng(seeds::derive(
        seed,
        &[seeds::tag::SUBSAMPLE],
    )));
    let keep: HashSet<&str> = idx[..n]
        .iter()
        .map(|&i| corpus.tweets[i].id.as_str())
        .collect();
    corpus.retain_ids(&keep)
}

/// Splits instance indices into `k` stratified folds.
///
/// Each class is shuffled with the seeded RNG and dealt round-robin; the
/// negative class continues dealing where the positive class stopped, so
/// fold sizes differ by at most one and per-fold positive counts differ by at
/// most one. Indices within a fold are ascending.
pub fn stratified_folds(labels: &[bool], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 {
        return Err(Error::Config("fold count must be at least 1".into()));
    }
    if k == 1 {
        return Ok(vec![(0..labels.len()).collect()]);
    }
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let smallest = pos.len().min(neg.len());
    if k > smallest {
        return Err(Error::TooManyFolds {
            folds: k,
            class_size: smallest,
        });
    }
    let mut rng = seeds::rng(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut folds = vec![Vec::new(); k];
    for (slot, &i) in pos.iter().chain(neg.iter()).enumerate() {
        folds[slot % k].push(i);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Class-proportional subsample of `n` indices (ascending).
pub fn stratified_subsample(labels: &[bool], n: usize, seed: u64) -> Vec<usize> {
    let total = labels.len();
    if n >= total {
        return (0..total).collect();
    }
    let mut pos: Vec<usize> = (0..total).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..total).filter(|&i| !labels[i]).collect();
    let mut take_pos = ((n as f64) * pos.len() as f64 / total as f64).round() as usize;
    take_pos = take_pos.min(pos.len()).min(n);
    if n - take_pos > neg.len() {
        take_pos = n - neg.len();
    }
    // keep both classes represented whenever possible
    if take_pos == 0 && !pos.is_empty() && n >= 2 {
        take_pos = 1;
    }
    if take_pos == n && !neg.is_empty() && n >= 2 {
        take_pos = n - 1;
    }
    let mut rng = seeds::rng(seeds::derive(seed, &[seeds::tag::SUBSAMPLE]));
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let mut out: Vec<usize> = pos[..take_pos]
        .iter()
        .chain(neg[..n - take_pos].iter())
        .copied()
        .collect();
    out.sort_unstable();
    out
}

/// Stratified folds over the Need/NoNeed tweets of a labeled corpus,
/// returned as tweet ids. Suspended tweets never enter a fold.
pub fn stratified_split(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    let labeled = corpus.labeled();
    if labeled.is_empty() {
        return Err(Error::InvalidInput(
            "corpus has no Need/NoNeed labels".into(),
        ));
    }
    let classes: Vec<bool> = labeled.iter().map(|(_, c)| *c).collect();
    let folds = stratified_folds(&classes, k, seed)?;
    Ok(folds
        .into_iter()
        .map(|f| f.into_iter().map(|i| labeled[i].0.id.clone()).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use std::io::Write;

    fn tweet(id: &str, text: &str, author: &str) -> Tweet {
        Tweet {
            id: id.into(),
            text: text.into(),
            lang: "de".into(),
            created_at: Utc.with_ymd_and_hms(2016, 3, 1, 12, 0, 0).unwrap(),
            author_id: author.into(),
            author_name: None,
            domain_tag: None,
        }
    }

    fn rec(t: &str, r: &str, need: bool) -> LabelRecord {
        LabelRecord {
            tweet_id: t.into(),
            labeler_id: r.into(),
            label: if need {
                RaterLabel::Need
            } else {
                RaterLabel::NoNeed
            },
        }
    }

    fn jsonl_file(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn loads_three_unique_records() {
        let f = jsonl_file(&[
            r#"{"id":"1","text":"Ladesäule gesucht","lang":"de","created_at":"2016-01-01T10:00:00Z","author_id":"a"}"#,
            r#"{"id":"2","text":"Reichweite","lang":"de","created_at":"2016-01-02T10:00:00Z","author_id":"b"}"#,
            r#"{"id":"3","text":"Akku","lang":"de","created_at":"2016-01-03T10:00:00Z","author_id":"c","domain_tag":"e-mobility"}"#,
        ]);
        let loaded = load_tweets(f.path(), TweetFormat::Jsonl).unwrap();
        assert_eq!(loaded.corpus.len(), 3);
        assert!(loaded.rejected.is_empty());
        assert_eq!(
            loaded.corpus.tweets[2].domain_tag.as_deref(),
            Some("e-mobility")
        );
    }

    #[test]
    fn duplicate_id_names_line() {
        let f = jsonl_file(&[
            r#"{"id":"1","text":"a","created_at":"2016-01-01T10:00:00Z"}"#,
            r#"{"id":"2","text":"b","created_at":"2016-01-01T10:00:00Z"}"#,
            r#"{"id":"1","text":"c","created_at":"2016-01-01T10:00:00Z"}"#,
        ]);
        let loaded = load_tweets(f.path(), TweetFormat::Jsonl).unwrap();
        assert_eq!(loaded.corpus.len(), 2);
        assert_eq!(loaded.rejected.len(), 1);
        assert_eq!(loaded.rejected[0].line, 3);
        assert!(loaded.rejected[0].message.contains("duplicate id 1"));
    }

    #[test]
    fn malformed_and_future_records_are_listed() {
        let f = jsonl_file(&[
            r#"{"id":"1","text":"ok","created_at":"2016-01-01T10:00:00Z"}"#,
            r#"{"id":"2","text":"   ","created_at":"2016-01-01T10:00:00Z"}"#,
            r#"not json"#,
            r#"{"id":"4","text":"later","created_at":"2999-01-01T10:00:00Z"}"#,
            r#"{"id":"5","text":"no date"}"#,
        ]);
        let loaded = load_tweets(f.path(), TweetFormat::Jsonl).unwrap();
        assert_eq!(loaded.corpus.len(), 1);
        let lines: Vec<usize> = loaded.rejected.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 3, 4, 5]);
    }

    #[test]
    fn unreadable_file_is_fatal() {
        assert!(matches!(
            load_tweets("/nonexistent/tweets.jsonl", TweetFormat::Jsonl),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn loads_csv_tweets() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "id,text,lang,created_at,author_id,author_name,domain_tag"
        )
        .unwrap();
        writeln!(
            f,
            "1,\"Mehr Ladesäulen, bitte\",de,2016-01-01T10:00:00Z,a,Anna Müller,"
        )
        .unwrap();
        writeln!(f, "2,Bahn zu spät,de,not-a-date,b,,rail-traffic").unwrap();
        let loaded = load_tweets(f.path(), TweetFormat::Csv).unwrap();
        assert_eq!(loaded.corpus.len(), 1);
        assert_eq!(
            loaded.corpus.tweets[0].author_name.as_deref(),
            Some("Anna Müller")
        );
        assert_eq!(loaded.corpus.tweets[0].domain_tag, None);
        assert_eq!(loaded.rejected.len(), 1);
        assert_eq!(loaded.rejected[0].line, 3);
    }

    #[test]
    fn two_of_three_is_need() {
        let agg = aggregate_labels(&[
            rec("t", "a", true),
            rec("t", "b", true),
            rec("t", "c", false),
        ]);
        assert_eq!(agg.labels[0].verdict, Verdict::Need);
        assert_eq!(agg.labels[0].votes_need, 2);
        let agg = aggregate_labels(&[
            rec("t", "a", false),
            rec("t", "b", false),
            rec("t", "c", false),
        ]);
        assert_eq!(agg.labels[0].verdict, Verdict::NoNeed);
        assert_eq!(agg.labels[0].votes_need, 0);
        let agg = aggregate_labels(&[
            rec("t", "a", false),
            rec("t", "b", true),
            rec("t", "c", false),
        ]);
        assert_eq!(agg.labels[0].verdict, Verdict::Suspended);
    }

    #[test]
    fn wrong_rater_count_is_unaggregatable() {
        let agg = aggregate_labels(&[
            rec("t1", "a", true),
            rec("t1", "b", true),
            rec("t2", "a", true),
            rec("t2", "a", true),
            rec("t2", "b", true),
            rec("t3", "a", true),
            rec("t3", "b", true),
            rec("t3", "c", true),
        ]);
        assert_eq!(agg.labels.len(), 1);
        assert_eq!(agg.labels[0].tweet_id, "t3");
        let ids: Vec<&str> = agg
            .unaggregatable
            .iter()
            .map(|u| u.tweet_id.as_str())
            .collect();
        assert_eq!(ids, vec!["t1", "t2"]);
    }

    #[test]
    fn url_rule_removes_link_tweets() {
        let c = Corpus::new(
            vec![
                tweet("1", "Ladesäule kaputt https://t.co/x", "a"),
                tweet("2", "Ladesäule kaputt", "a"),
            ],
            "test",
        );
        let rules = FilterRules {
            drop_urls: true,
            ..Default::default()
        };
        let (out, report) = filter_corpus(&c, &rules);
        assert_eq!(out.tweets.len(), 1);
        assert_eq!(out.tweets[0].id, "2");
        assert_eq!(report.removed[&FilterRule::Url], 1);
    }

    #[test]
    fn no_matches_is_identity() {
        let c = Corpus::new(vec![tweet("1", "a", "x"), tweet("2", "b", "y")], "test");
        let rules = FilterRules {
            drop_urls: true,
            drop_retweets: true,
            max_posts_per_author_day: Some(5),
            author_blocklist: ["z".to_string()].into(),
        };
        let (out, report) = filter_corpus(&c, &rules);
        assert_eq!(out, c);
        assert!(report.removed.is_empty());
    }

    #[test]
    fn url_and_blocklist_counts_on_hundred_tweets() {
        let tweets: Vec<Tweet> = (0..100)
            .map(|i| {
                let text = if i < 10 {
                    format!("post {i} www.example.org")
                } else {
                    format!("post {i}")
                };
                let author = if (10..15).contains(&i) {
                    "spammer"
                } else {
                    "someone"
                };
                tweet(&i.to_string(), &text, author)
            })
            .collect();
        let expected_url = tweets.iter().filter(|t| t.text.contains("www.")).count();
        let expected_block = tweets.iter().filter(|t| t.author_id == "spammer").count();
        let rules = FilterRules {
            drop_urls: true,
            author_blocklist: ["spammer".to_string()].into(),
            ..Default::default()
        };
        let (out, report) = filter_corpus(&Corpus::new(tweets, "t"), &rules);
        assert_eq!(out.len(), 100 - expected_url - expected_block);
        assert_eq!(out.len(), 85);
        assert_eq!(report.removed[&FilterRule::Url], 10);
        assert_eq!(report.removed[&FilterRule::Blocklist], 5);
    }

    #[test]
    fn retweets_and_bots() {
        let mut tweets = vec![tweet("rt", "RT @janboehm toll", "a")];
        for i in 0..4 {
            tweets.push(tweet(&format!("bot{i}"), "kauft jetzt", "bot"));
        }
        tweets.push(tweet("human", "Elektroauto", "human"));
        let rules = FilterRules {
            drop_retweets: true,
            max_posts_per_author_day: Some(3),
            ..Default::default()
        };
        let (out, report) = filter_corpus(&Corpus::new(tweets, "t"), &rules);
        assert_eq!(
            out.tweets.iter().map(|t| t.id.as_str()).collect::<Vec<_>>(),
            vec!["human"]
        );
        assert_eq!(report.removed[&FilterRule::Retweet], 1);
        assert_eq!(report.removed[&FilterRule::AuthorRate], 4);
    }

    #[test]
    fn hundred_tweet_split_is_exact() {
        let labels: Vec<bool> = (0..100).map(|i| i % 5 == 0).collect();
        let folds = stratified_folds(&labels, 5, 7).unwrap();
        for f in &folds {
            assert_eq!(f.len(), 20);
            assert_eq!(f.iter().filter(|&&i| labels[i]).count(), 4);
        }
        assert_eq!(folds, stratified_folds(&labels, 5, 7).unwrap());
        assert_eq!(
            stratified_folds(&labels, 1, 7).unwrap(),
            vec![(0..100).collect::<Vec<_>>()]
        );
    }

    #[test]
    fn too_many_folds() {
        let labels = vec![true, true, false, false, false];
        assert!(matches!(
            stratified_folds(&labels, 3, 1),
            Err(Error::TooManyFolds {
                folds: 3,
                class_size: 2
            })
        ));
    }

    #[test]
    fn split_excludes_suspended() {
        let tweets: Vec<Tweet> = (0..12).map(|i| tweet(&i.to_string(), "x", "a")).collect();
        let labels: Vec<AggregatedLabel> = (0..12)
            .map(|i| {
                let votes = (i % 3) as u8;
                AggregatedLabel {
                    tweet_id: i.to_string(),
                    verdict: Verdict::from_votes(votes),
                    votes_need: votes,
                }
            })
            .collect();
        let c = Corpus::new(tweets, "t").with_labels(labels).unwrap();
        let folds = stratified_split(&c, 2, 3).unwrap();
        let all: Vec<String> = folds.concat();
        assert_eq!(all.len(), 8);
        for id in &all {
            assert_ne!(id.parse::<usize>().unwrap() % 3, 1);
        }
    }

    #[test]
    fn dangling_labels_rejected() {
        let c = Corpus::new(vec![tweet("1", "x", "a")], "t");
        let err = c
            .with_labels(vec![AggregatedLabel {
                tweet_id: "nope".into(),
                verdict: Verdict::Need,
                votes_need: 3,
            }])
            .unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn stratified_subsample_keeps_proportion() {
        let labels: Vec<bool> = (0..1000).map(|i| i % 4 == 0).collect();
        let idx = stratified_subsample(&labels, 200, 9);
        assert_eq!(idx.len(), 200);
        assert_eq!(idx.iter().filter(|&&i| labels[i]).count(), 50);
    }
}
