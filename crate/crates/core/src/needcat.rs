//! Need categories: one-vs-rest category models, multi-label assignment and
//! time-bucketed quantification.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, NaiveDate, TimeZone, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::RecordError;
use crate::error::{Error, Result};
use crate::evaluation::{nested_cv, Doc, EvalOptions, EvaluationReport, GridSpec};
use crate::learners::{AlgorithmParams, AlgorithmSpec, TrainedModel};
use crate::sampling::SamplingSpec;
use crate::seeds::{self, tag};
use crate::textproc::{Pipeline, TokenSequence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeedCategory {
    Price,
    CarCharacteristics,
    ChargingInfrastructure,
    Range,
    ChargingTechnology,
    EnvironmentHealth,
    Society,
    Other,
}

impl NeedCategory {
    pub const ALL: [NeedCategory; 8] = [
        NeedCategory::Price,
        NeedCategory::CarCharacteristics,
        NeedCategory::ChargingInfrastructure,
        NeedCategory::Range,
        NeedCategory::ChargingTechnology,
        NeedCategory::EnvironmentHealth,
        NeedCategory::Society,
        NeedCategory::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NeedCategory::Price => "price",
            NeedCategory::CarCharacteristics => "car_characteristics",
            NeedCategory::ChargingInfrastructure => "charging_infrastructure",
            NeedCategory::Range => "range",
            NeedCategory::ChargingTechnology => "charging_technology",
            NeedCategory::EnvironmentHealth => "environment_health",
            NeedCategory::Society => "society",
            NeedCategory::Other => "other",
        }
    }

    /// Fine-grained needs grouped under this category. Metadata only.
    pub fn sub_needs(self) -> &'static [&'static str] {
        match self {
            NeedCategory::Price => &[
                "car price",
                "electrical price",
                "oil/gas price",
                "price (other)",
            ],
            NeedCategory::CarCharacteristics => &[
                "car performance",
                "driving experience",
                "car sound",
                "car smell",
                "car comfort",
                "car design",
                "car characteristics (other)",
            ],
            NeedCategory::ChargingInfrastructure => &[
                "charging infrastructure (general)",
                "charging infrastructure existence",
                "charging infrastructure availability (physical)",
                "charging infrastructure availability (technical)",
            ],
            NeedCategory::Range => &["range"],
            NeedCategory::ChargingTechnology => &[
                "charging interfaces and technologies",
                "range extender",
                "battery (other)",
                "charging speed",
            ],
            NeedCategory::EnvironmentHealth => &[
                "environmentally friendly car production",
                "environmentally friendly car usage",
                "environment & health (other)",
            ],
            NeedCategory::Society => &["politics", "unspecified desire for e-mobility"],
            NeedCategory::Other => &["joke", "definable", "other (miscellaneous)"],
        }
    }
}

impl std::fmt::Display for NeedCategory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NeedCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NeedCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidInput(format!("unknown need category {s:?}")))
    }
}

#[derive(Debug, Deserialize)]
struct CategoryRow {
    tweet_id: String,
    category: String,
}

pub type CategoryLabels = BTreeMap<String, BTreeSet<NeedCategory>>;

/// Reads a `tweet_id,category` CSV; repeated ids carry multiple labels.
pub fn load_category_labels(path: impl AsRef<Path>) -> Result<(CategoryLabels, Vec<RecordError>)> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::io(path, std::io::Error::other(e)))?
        .clone();
    let mut labels: BTreeMap<String, BTreeSet<NeedCategory>> = BTreeMap::new();
    let mut rejected = Vec::new();
    for rec in rdr.records() {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                rejected.push(RecordError {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parsed = rec
            .deserialize::<CategoryRow>(Some(&headers))
            .map_err(|e| e.to_string())
            .and_then(|row| {
                let cat = row
                    .category
                    .parse::<NeedCategory>()
                    .map_err(|e| e.to_string())?;
                Ok((row.tweet_id, cat))
            });
        match parsed {
            Ok((id, cat)) => {
                labels.entry(id).or_default().insert(cat);
            }
            Err(message) => rejected.push(RecordError { line, message }),
        }
    }
    Ok((labels, rejected))
}

/// A need tweet with its coded categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryDoc {
    pub id: String,
    pub tokens: TokenSequence,
    pub categories: BTreeSet<NeedCategory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryTrainingOptions {
    pub grid: GridSpec,
    pub eval: EvalOptions,
}

impl Default for CategoryTrainingOptions {
    fn default() -> Self {
        CategoryTrainingOptions {
            grid: GridSpec::default_for(crate::learners::AlgorithmKind::PegasosSvm),
            eval: EvalOptions {
                outer_k: 10,
                ..EvalOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedCategory {
    pub category: NeedCategory,
    pub positives: usize,
    pub needed: usize,
}

#[derive(Debug, Clone)]
pub struct CategoryTraining {
    pub models: BTreeMap<NeedCategory, TrainedModel>,
    pub reports: BTreeMap<NeedCategory, EvaluationReport>,
    pub skipped: Vec<SkippedCategory>,
}

/// The most often selected cell across outer folds; ties go to the cell
/// that comes first in grid order.
fn consensus_params(report: &EvaluationReport, cells: &[AlgorithmParams]) -> AlgorithmParams {
    let mut votes = vec![0usize; cells.len()];
    for f in &report.folds {
        if let Some(i) = cells.iter().position(|c| *c == f.params) {
            votes[i] += 1;
        }
    }
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    cells[best]
}

/// One-vs-rest nested CV per category, then a final model per category on
/// all docs with the consensus parameters. A tweet coded with several
/// categories is a positive in each of their problems.
///
/// Categories with fewer than `max(2 * inner_k, outer_k)` positives (or
/// negatives) are skipped and listed in the result.
pub fn train_category_models(
    docs: &[CategoryDoc],
    pipeline: std::sync::Arc<Pipeline>,
    opts: &CategoryTrainingOptions,
) -> Result<CategoryTraining> {
    let cells = opts.grid.cells()?;
    let needed = (2 * opts.eval.inner_k).max(opts.eval.outer_k);
    let mut out = CategoryTraining {
        models: BTreeMap::new(),
        reports: BTreeMap::new(),
        skipped: Vec::new(),
    };
    for (idx, cat) in NeedCategory::ALL.into_iter().enumerate() {
        let binary: Vec<Doc> = docs
            .iter()
            .map(|d| Doc {
                id: d.id.clone(),
                tokens: d.tokens.clone(),
                label: d.categories.contains(&cat),
            })
            .collect();
        let positives = binary.iter().filter(|d| d.label).count();
        if positives < needed || binary.len() - positives < needed {
            log::warn!("skipping category {cat}: {positives} positives, {needed} needed");
            out.skipped.push(SkippedCategory {
                category: cat,
                positives,
                needed,
            });
            continue;
        }
        let eval = EvalOptions {
            seed: seeds::derive(opts.eval.seed, &[tag::CATEGORY, idx as u64]),
            ..opts.eval.clone()
        };
        let report =
            nested_cv(&opts.grid, &binary, &eval)?.with_pipeline(pipeline.config().clone());
        let spec = AlgorithmSpec::new(consensus_params(&report, &cells), eval.seed);
        let training: Vec<(TokenSequence, bool)> =
            binary.into_iter().map(|d| (d.tokens, d.label)).collect();
        let sampling: Option<SamplingSpec> = eval.sampling.map(|s| s.with_seed(eval.seed));
        let model = TrainedModel::fit_tokens(
            &spec,
            sampling.as_ref(),
            pipeline.clone(),
            &training,
            cat.as_str(),
        )?;
        out.models.insert(cat, model);
        out.reports.insert(cat, report);
    }
    Ok(out)
}

pub const DEFAULT_CATEGORY_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryAssignment {
    pub tweet_id: String,
    /// Never empty.
    pub categories: Vec<NeedCategory>,
    pub scores: BTreeMap<NeedCategory, f64>,
    /// Set when no model cleared the threshold and `other` was assigned.
    pub low_confidence: bool,
}

/// Scores `text` with every available category model. Categories scoring
/// above `threshold` are assigned; if none does, the tweet falls back to
/// `other` and is flagged low-confidence.
pub fn classify_needs(
    models: &BTreeMap<NeedCategory, TrainedModel>,
    tweet_id: &str,
    text: &str,
    threshold: f64,
) -> CategoryAssignment {
    let scored: Vec<(NeedCategory, f64)> = models
        .par_iter()
        .map(|(c, m)| (*c, m.score_text(text)))
        .collect();
    CategoryAssignment::from_scores(tweet_id, scored.into_iter().collect(), threshold)
}

impl CategoryAssignment {
    /// Applies the assignment rule of [`classify_needs`] to precomputed scores.
    pub fn from_scores(
        tweet_id: &str,
        scores: BTreeMap<NeedCategory, f64>,
        threshold: f64,
    ) -> Self {
        let categories: Vec<NeedCategory> = scores
            .iter()
            .filter(|(_, &s)| s > threshold)
            .map(|(c, _)| *c)
            .collect();
        let low_confidence = categories.is_empty();
        CategoryAssignment {
            tweet_id: tweet_id.to_string(),
            categories: if low_confidence {
                vec![NeedCategory::Other]
            } else {
                categories
            },
            scores,
            low_confidence,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    Day,
    Week,
    Month,
}

impl FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "day" => Ok(Bucket::Day),
            "week" => Ok(Bucket::Week),
            "month" => Ok(Bucket::Month),
            _ => Err(Error::InvalidInput(format!(
                "unknown bucket {s:?} (day, week, month)"
            ))),
        }
    }
}

impl Bucket {
    /// Start of the bucket holding `t`. Weeks start on Monday.
    pub fn floor(self, t: DateTime<Utc>) -> DateTime<Utc> {
        let d = t.date_naive();
        let start = match self {
            Bucket::Day => d,
            Bucket::Week => d - Duration::days(d.weekday().num_days_from_monday() as i64),
            Bucket::Month => {
                NaiveDate::from_ymd_opt(d.year(), d.month(), 1).expect("valid month start")
            }
        };
        Utc.from_utc_datetime(&start.and_hms_opt(0, 0, 0).expect("midnight"))
    }

    pub fn next(self, start: DateTime<Utc>) -> DateTime<Utc> {
        match self {
            Bucket::Day => start + Duration::days(1),
            Bucket::Week => start + Duration::days(7),
            Bucket::Month => {
                let d = start.date_naive();
                let (y, m) = if d.month() == 12 {
                    (d.year() + 1, 1)
                } else {
                    (d.year(), d.month() + 1)
                };
                let first = NaiveDate::from_ymd_opt(y, m, 1).expect("valid month start");
                Utc.from_utc_datetime(&first.and_hms_opt(0, 0, 0).expect("midnight"))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedQuantification {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    /// All eight categories, zero-filled.
    pub counts: BTreeMap<NeedCategory, u64>,
    /// Count over total assignments; sums to 1.
    pub shares: BTreeMap<NeedCategory, f64>,
    /// Count over tweets; sums to at least 1 with multi-label tweets.
    pub tweet_shares: BTreeMap<NeedCategory, f64>,
    pub total_assignments: u64,
    pub total_tweets: u64,
}

impl NeedQuantification {
    /// Shares from zero-filled `counts` over `tweets` tweets; zero
    /// denominators give zero shares.
    pub fn from_counts(
        start: DateTime<Utc>,
        end: DateTime<Utc>,
        counts: BTreeMap<NeedCategory, u64>,
        tweets: u64,
    ) -> Self {
        let total: u64 = counts.values().sum();
        let ratio = |c: u64, d: u64| if d == 0 { 0.0 } else { c as f64 / d as f64 };
        NeedQuantification {
            start,
            end,
            shares: counts.iter().map(|(k, &c)| (*k, ratio(c, total))).collect(),
            tweet_shares: counts
                .iter()
                .map(|(k, &c)| (*k, ratio(c, tweets)))
                .collect(),
            counts,
            total_assignments: total,
            total_tweets: tweets,
        }
    }
}

/// A timestamped set of categories, one per classified need tweet.
pub type TimedCategories<'a> = (DateTime<Utc>, &'a [NeedCategory]);

/// Per-bucket category counts and shares for assignments inside `window`
/// (half-open). Only buckets holding at least one tweet are emitted.
pub fn quantify<'a>(
    items: impl IntoIterator<Item = TimedCategories<'a>>,
    window: Option<(DateTime<Utc>, DateTime<Utc>)>,
    bucket: Bucket,
) -> Vec<NeedQuantification> {
    let mut per: BTreeMap<DateTime<Utc>, (BTreeMap<NeedCategory, u64>, u64)> = BTreeMap::new();
    for (at, cats) in items {
        if window.is_some_and(|(s, e)| at < s || at >= e) {
            continue;
        }
        let entry = per
            .entry(bucket.floor(at))
            .or_insert_with(|| (NeedCategory::ALL.iter().map(|&c| (c, 0)).collect(), 0));
        entry.1 += 1;
        let distinct: BTreeSet<&NeedCategory> = cats.iter().collect();
        for c in distinct {
            *entry.0.get_mut(c).expect("zero-filled") += 1;
        }
    }
    per.into_iter()
        .map(|(start, (counts, tweets))| {
            NeedQuantification::from_counts(start, bucket.next(start), counts, tweets)
        })
        .collect()
}

/// Totals over the whole window as a single entry, or `None` when empty.
pub fn quantify_total<'a>(
    items: impl IntoIterator<Item = TimedCategories<'a>>,
    window: Option<(DateTime<Utc>, DateTime<Utc>)>,
) -> Option<NeedQuantification> {
    let series = quantify(items, window, Bucket::Day);
    let first = series.first()?.start;
    let last = series.last()?.end;
    let mut counts: BTreeMap<NeedCategory, u64> =
        NeedCategory::ALL.iter().map(|&c| (c, 0)).collect();
    let mut tweets = 0;
    for q in &series {
        for (c, n) in &q.counts {
            *counts.get_mut(c).expect("zero-filled") += n;
        }
        tweets += q.total_tweets;
    }
    let (start, end) = window.unwrap_or((first, last));
    Some(NeedQuantification::from_counts(start, end, counts, tweets))
}
