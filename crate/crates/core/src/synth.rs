//! Seeded synthetic corpora for tests, demos and the acceptance suite.
//!
//! Need tweets draw words from one vocabulary and the rest from another, so
//! the classes are linearly separable before label noise. Need tweets also
//! carry one marker word per planted category.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use chrono::{DateTime, Duration, Utc};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::corpus::{AggregatedLabel, Corpus, Tweet, Verdict};
use crate::error::Result;
use crate::evaluation::Doc;
use crate::learners::{AlgorithmParams, AlgorithmSpec, NaiveBayesParams, TrainedModel};
use crate::needcat::{CategoryDoc, NeedCategory};
use crate::seeds;
use crate::textproc::Pipeline;

/// Word stems for one synthetic domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Theme {
    pub id_prefix: String,
    pub need_word: String,
    pub chat_word: String,
    /// Distinct words per class vocabulary.
    pub words: usize,
    /// Plant category markers into need tweets.
    pub categories: bool,
}

impl Default for Theme {
    fn default() -> Self {
        Theme {
            id_prefix: "t".into(),
            need_word: "wunsch".into(),
            chat_word: "plausch".into(),
            words: 30,
            categories: true,
        }
    }
}

impl Theme {
    pub fn named(prefix: &str, need_word: &str, chat_word: &str) -> Theme {
        Theme {
            id_prefix: prefix.into(),
            need_word: need_word.into(),
            chat_word: chat_word.into(),
            ..Theme::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTweet {
    pub id: String,
    pub text: String,
    /// Label after noise.
    pub need: bool,
    /// Planted categories; empty for generated non-needs.
    pub categories: BTreeSet<NeedCategory>,
}

/// Marker word planted for a category.
pub fn marker(cat: NeedCategory) -> &'static str {
    match cat {
        NeedCategory::Price => "preisfrage",
        NeedCategory::CarCharacteristics => "fahrgefuehl",
        NeedCategory::ChargingInfrastructure => "ladesaeule",
        NeedCategory::Range => "reichweite",
        NeedCategory::ChargingTechnology => "schnelllader",
        NeedCategory::EnvironmentHealth => "umweltbilanz",
        NeedCategory::Society => "foerderung",
        NeedCategory::Other => "sonstiges",
    }
}

fn word(stem: &str, k: usize) -> String {
    // letters only, so stemming and special-character removal keep it whole
    let mut w = stem.to_string();
    let mut k = k;
    loop {
        w.push((b'a' + (k % 26) as u8) as char);
        k /= 26;
        if k == 0 {
            break;
        }
    }
    w.push('x');
    w
}

/// `n` tweets, a `prevalence` share of them needs, each label flipped with
/// probability `noise`. With `theme.categories`, need tweets plant one
/// category (two with probability 0.3) chosen uniformly.
pub fn need_tweets(
    n: usize,
    prevalence: f64,
    noise: f64,
    seed: u64,
    theme: &Theme,
) -> Vec<SynthTweet> {
    let mut rng = seeds::rng(seed);
    let n_need = (n as f64 * prevalence).round() as usize;
    let mut truth: Vec<bool> = (0..n).map(|i| i < n_need).collect();
    truth.shuffle(&mut rng);
    truth
        .into_iter()
        .enumerate()
        .map(|(i, need)| {
            let stem = if need {
                &theme.need_word
            } else {
                &theme.chat_word
            };
            let len = rng.gen_range(4..9);
            let mut words: Vec<String> = (0..len)
                .map(|_| word(stem, rng.gen_range(0..theme.words)))
                .collect();
            let mut categories = BTreeSet::new();
            if need && theme.categories {
                let planted = if rng.gen_bool(0.3) { 2 } else { 1 };
                while categories.len() < planted {
                    categories.insert(NeedCategory::ALL[rng.gen_range(0..8)]);
                }
                for c in &categories {
                    let at = rng.gen_range(0..=words.len());
                    words.insert(at, marker(*c).to_string());
                }
            }
            let flip = rng.gen_bool(noise);
            SynthTweet {
                id: format!("{}{i}", theme.id_prefix),
                text: words.join(" "),
                need: need ^ flip,
                categories,
            }
        })
        .collect()
}

pub fn to_docs(tweets: &[SynthTweet], pipeline: &Pipeline) -> Vec<Doc> {
    tweets
        .iter()
        .map(|t| Doc {
            id: t.id.clone(),
            tokens: pipeline.tokens(&t.text),
            label: t.need,
        })
        .collect()
}

/// Category docs for the tweets that carry planted categories.
pub fn to_category_docs(tweets: &[SynthTweet], pipeline: &Pipeline) -> Vec<CategoryDoc> {
    tweets
        .iter()
        .filter(|t| !t.categories.is_empty())
        .map(|t| CategoryDoc {
            id: t.id.clone(),
            tokens: pipeline.tokens(&t.text),
            categories: t.categories.clone(),
        })
        .collect()
}

/// Corpus records, one every `step` from `start`, authors cycling through
/// a handful of display names.
pub fn to_raw_tweets(tweets: &[SynthTweet], start: DateTime<Utc>, step: Duration) -> Vec<Tweet> {
    const AUTHORS: [&str; 5] = [
        "Anna Schmidt",
        "Jan Meyer",
        "Kim Berg",
        "eauto_fan",
        "Laura K.",
    ];
    tweets
        .iter()
        .enumerate()
        .map(|(i, t)| Tweet {
            id: t.id.clone(),
            text: t.text.clone(),
            lang: "de".into(),
            created_at: start + step * i as i32,
            author_id: format!("u{}", i % AUTHORS.len()),
            author_name: Some(AUTHORS[i % AUTHORS.len()].into()),
            domain_tag: None,
        })
        .collect()
}

/// A labeled corpus with unanimous verdicts.
pub fn to_corpus(tweets: &[SynthTweet], start: DateTime<Utc>, step: Duration) -> Corpus {
    let labels = tweets
        .iter()
        .map(|t| AggregatedLabel {
            tweet_id: t.id.clone(),
            verdict: if t.need {
                Verdict::Need
            } else {
                Verdict::NoNeed
            },
            votes_need: if t.need { 3 } else { 0 },
        })
        .collect();
    Corpus::new(to_raw_tweets(tweets, start, step), "synthetic")
        .with_labels(labels)
        .expect("labels match tweets")
}

/// Naive Bayes models for the need decision and each category, fitted on
/// `n` generated tweets of `theme` (30% needs, no label noise).
pub fn demo_models(
    n: usize,
    seed: u64,
    theme: &Theme,
    pipeline: Arc<Pipeline>,
) -> Result<(TrainedModel, BTreeMap<NeedCategory, TrainedModel>)> {
    let spec = AlgorithmSpec::new(
        AlgorithmParams::NaiveBayes(NaiveBayesParams::default()),
        seed,
    );
    let tweets = need_tweets(n, 0.3, 0.0, seed, theme);
    let docs: Vec<(&str, bool)> = tweets.iter().map(|t| (t.text.as_str(), t.need)).collect();
    let need = TrainedModel::fit(
        &spec,
        None,
        pipeline.clone(),
        &docs,
        "synthetic need tweets",
    )?;
    let needs: Vec<&SynthTweet> = tweets.iter().filter(|t| !t.categories.is_empty()).collect();
    let mut categories = BTreeMap::new();
    for cat in NeedCategory::ALL {
        let docs: Vec<(&str, bool)> = needs
            .iter()
            .map(|t| (t.text.as_str(), t.categories.contains(&cat)))
            .collect();
        let m = TrainedModel::fit(
            &spec,
            None,
            pipeline.clone(),
            &docs,
            &format!("synthetic {cat} tweets"),
        )?;
        categories.insert(cat, m);
    }
    Ok((need, categories))
}
