//! Read-side queries over a store snapshot.
//!
//! A tweet counts as a need when its stored score is above the threshold
//! passed in, not the one in force when it was classified, so threshold
//! changes apply to stored tweets without reprocessing. Tweets flagged only
//! under the current threshold get their categories from the stored
//! category scores.

use chrono::{DateTime, Utc};
use needminer_core::corpus::Tweet;
use needminer_core::enrich::{Gender, Sentiment};
use needminer_core::needcat::{
    quantify, quantify_total, Bucket, CategoryAssignment, NeedCategory, NeedQuantification,
};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::orchestrate::Thresholds;
use crate::store::StoredTweet;

pub const DEFAULT_TOP: usize = 10;

/// Half-open `[from, to)`; either bound may be open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub from: Option<DateTime<Utc>>,
    pub to: Option<DateTime<Utc>>,
}

impl Window {
    pub fn validate(&self) -> Result<()> {
        match (self.from, self.to) {
            (Some(f), Some(t)) if f > t => Err(ServiceError::Query(format!(
                "window start {f} is after its end {t}"
            ))),
            _ => Ok(()),
        }
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.from.is_none_or(|f| t >= f) && self.to.is_none_or(|e| t < e)
    }

    fn bounds(&self) -> Option<(DateTime<Utc>, DateTime<Utc>)> {
        self.from.zip(self.to)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Filters {
    /// Keep tweets assigned this category and count only it.
    pub category: Option<NeedCategory>,
    pub min_score: Option<f64>,
    pub gender: Option<Gender>,
}

impl Filters {
    pub fn validate(&self) -> Result<()> {
        match self.min_score {
            Some(s) if !(0.0..=1.0).contains(&s) => {
                Err(ServiceError::Query(format!("min_score {s} outside [0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

/// A flagged tweet as the read API shows it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedTweet {
    pub tweet: Tweet,
    pub need_score: f64,
    pub categories: Vec<NeedCategory>,
    pub low_confidence: bool,
    pub sentiment: Sentiment,
    pub gender: Gender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub threshold: f64,
    /// `None` when nothing matched and the window is not closed on both ends.
    pub quantification: Option<NeedQuantification>,
    pub top: Vec<NeedTweet>,
}

/// Flagged tweets matching window and filters, highest score first, newer
/// first among equal scores.
pub fn flagged(
    snapshot: &[StoredTweet],
    window: &Window,
    filters: &Filters,
    th: Thresholds,
) -> Result<Vec<NeedTweet>> {
    window.validate()?;
    filters.validate()?;
    let mut out: Vec<NeedTweet> = snapshot
        .iter()
        .filter_map(|s| {
            let a = s.annotation.as_ref()?;
            if a.need_score <= th.need
                || !window.contains(s.tweet.created_at)
                || filters.min_score.is_some_and(|m| a.need_score < m)
                || filters.gender.is_some_and(|g| a.gender != g)
            {
                return None;
            }
            let assignment = a.categories.clone().unwrap_or_else(|| {
                CategoryAssignment::from_scores(&s.tweet.id, a.category_scores.clone(), th.category)
            });
            let categories = match filters.category {
                Some(c) if assignment.categories.contains(&c) => vec![c],
                Some(_) => return None,
                None => assignment.categories,
            };
            Some(NeedTweet {
                tweet: s.tweet.clone(),
                need_score: a.need_score,
                categories,
                low_confidence: assignment.low_confidence,
                sentiment: a.sentiment,
                gender: a.gender,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        b.need_score
            .total_cmp(&a.need_score)
            .then(b.tweet.created_at.cmp(&a.tweet.created_at))
            .then(a.tweet.id.cmp(&b.tweet.id))
    });
    Ok(out)
}

pub fn query_summary(
    snapshot: &[StoredTweet],
    window: &Window,
    filters: &Filters,
    th: Thresholds,
    top: usize,
) -> Result<Summary> {
    let mut tweets = flagged(snapshot, window, filters, th)?;
    let items = tweets
        .iter()
        .map(|t| (t.tweet.created_at, t.categories.as_slice()));
    let quantification = quantify_total(items, window.bounds()).or_else(|| {
        window.bounds().map(|(s, e)| {
            NeedQuantification::from_counts(
                s,
                e,
                NeedCategory::ALL.iter().map(|&c| (c, 0)).collect(),
                0,
            )
        })
    });
    tweets.truncate(top);
    Ok(Summary {
        threshold: th.need,
        quantification,
        top: tweets,
    })
}

pub fn query_timeseries(
    snapshot: &[StoredTweet],
    window: &Window,
    filters: &Filters,
    th: Thresholds,
    bucket: Bucket,
) -> Result<Vec<NeedQuantification>> {
    let tweets = flagged(snapshot, window, filters, th)?;
    Ok(quantify(
        tweets
            .iter()
            .map(|t| (t.tweet.created_at, t.categories.as_slice())),
        window.bounds(),
        bucket,
    ))
}

/// The `limit` highest-scoring flagged tweets.
pub fn query_tweets(
    snapshot: &[StoredTweet],
    window: &Window,
    filters: &Filters,
    th: Thresholds,
    limit: usize,
) -> Result<Vec<NeedTweet>> {
    let mut t = flagged(snapshot, window, filters, th)?;
    t.truncate(limit);
    Ok(t)
}
