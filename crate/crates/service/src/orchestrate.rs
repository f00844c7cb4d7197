//! Runs stored tweets through need model, category models, sentiment and
//! gender, one model-version set at a time.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use needminer_core::corpus::Tweet;
use needminer_core::enrich::{GenderModel, NameLexicon, SentimentLexicon, SentimentModel};
use needminer_core::needcat::{CategoryAssignment, NeedCategory, DEFAULT_CATEGORY_THRESHOLD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};
use crate::registry::{LoadedModels, ModelRegistry};
use crate::store::{Annotation, StoredTweet, TweetStore};

#[derive(Clone)]
pub struct Enrichers {
    pub sentiment: Arc<dyn SentimentModel>,
    pub gender: Arc<dyn GenderModel>,
}

impl Default for Enrichers {
    /// The bundled toy lexicons.
    fn default() -> Self {
        Enrichers {
            sentiment: Arc::new(SentimentLexicon::toy()),
            gender: Arc::new(NameLexicon::toy()),
        }
    }
}

impl std::fmt::Debug for Enrichers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("Enrichers")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// A tweet is a need when its score is strictly above this.
    pub need: f64,
    pub category: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            need: 0.5,
            category: DEFAULT_CATEGORY_THRESHOLD,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("need", self.need), ("category", self.category)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ServiceError::Config(format!(
                    "{name} threshold {v} outside [0, 1]"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessReport {
    pub examined: usize,
    pub processed: usize,
    pub needs: usize,
    /// Tweets already annotated with the current model versions.
    pub up_to_date: usize,
}

/// Annotates one tweet.
pub fn annotate(
    tweet: &Tweet,
    models: &LoadedModels,
    enrich: &Enrichers,
    th: Thresholds,
    now: DateTime<Utc>,
) -> Annotation {
    let need_score = models.need.score_text(&tweet.text);
    let is_need = need_score > th.need;
    let category_scores: BTreeMap<NeedCategory, f64> = models
        .categories
        .iter()
        .map(|(c, m)| (*c, m.score_text(&tweet.text)))
        .collect();
    let categories = is_need
        .then(|| CategoryAssignment::from_scores(&tweet.id, category_scores.clone(), th.category));
    Annotation {
        need_score,
        is_need,
        threshold: th.need,
        categories,
        category_scores,
        sentiment: enrich.sentiment.score(&tweet.text),
        gender: enrich.gender.predict(tweet.author_name.as_deref()),
        versions: models.versions.clone(),
        processed_at: now,
    }
}

/// Processes every tweet not yet annotated with `models.versions`.
/// Each tweet is written as one record.
pub fn orchestrate_with(
    store: &mut dyn TweetStore,
    models: &LoadedModels,
    enrich: &Enrichers,
    th: Thresholds,
) -> Result<ProcessReport> {
    th.validate()?;
    let snapshot = store.snapshot();
    let pending: Vec<&StoredTweet> = snapshot
        .iter()
        .filter(|t| {
            t.annotation
                .as_ref()
                .is_none_or(|a| a.versions != models.versions)
        })
        .collect();
    let now = Utc::now();
    let done: Vec<StoredTweet> = pending
        .par_iter()
        .map(|t| StoredTweet {
            annotation: Some(annotate(&t.tweet, models, enrich, th, now)),
            ..(*t).clone()
        })
        .collect();
    let mut report = ProcessReport {
        examined: snapshot.len(),
        up_to_date: snapshot.len() - pending.len(),
        ..Default::default()
    };
    for t in done {
        report.processed += 1;
        report.needs += t.annotation.as_ref().is_some_and(|a| a.is_need) as usize;
        store.update(t)?;
    }
    Ok(report)
}

/// Loads the registry's active models first; nothing is written if any
/// of them fails to load.
pub fn orchestrate(
    store: &mut dyn TweetStore,
    registry: &ModelRegistry,
    enrich: &Enrichers,
    th: Thresholds,
) -> Result<ProcessReport> {
    let models = registry.load()?;
    orchestrate_with(store, &models, enrich, th)
}
