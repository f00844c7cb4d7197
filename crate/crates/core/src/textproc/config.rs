use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::stem::StemLanguage;

/// One preprocessing option. A config is a set of these; the order they are
/// declared in never matters, steps always run in the canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    UsernameRemoval,
    RetweetTagRemoval,
    SpecialCharRemoval,
    MinTokenLength(usize),
    HashtagSymbolRemoval,
    Stemming(StemLanguage),
    Downcasing,
    Ngrams(Vec<usize>),
    Lemmatizing,
    SynsetAdder,
    HypernymAdder(usize),
    Disambiguator,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub username_removal: bool,
    pub retweet_tag_removal: bool,
    pub special_char_removal: bool,
    pub downcasing: bool,
    pub hashtag_symbol_removal: bool,
    pub min_token_length: Option<usize>,
    pub stemming: Option<StemLanguage>,
    /// Extra n-gram orders appended after the unigrams; each in {2, 3}.
    pub ngrams: Vec<usize>,
    pub lemmatizing: bool,
    pub synset_adder: bool,
    pub hypernym_adder: Option<usize>,
    pub disambiguator: bool,
}

impl PipelineConfig {
    /// All syntactic steps that help on the German need corpus: every
    /// removal step, downcasing, a two-character length floor and German
    /// stemming. No n-grams, no semantic steps.
    pub fn recommended() -> Self {
        PipelineConfig {
            username_removal: true,
            retweet_tag_removal: true,
            special_char_removal: true,
            downcasing: true,
            hashtag_symbol_removal: true,
            min_token_length: Some(2),
            stemming: Some(StemLanguage::German),
            ..Default::default()
        }
    }

    pub fn from_steps(steps: &[Step]) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for step in steps {
            match step {
                Step::UsernameRemoval => cfg.username_removal = true,
                Step::RetweetTagRemoval => cfg.retweet_tag_removal = true,
                Step::SpecialCharRemoval => cfg.special_char_removal = true,
                Step::MinTokenLength(n) => cfg.min_token_length = Some(*n),
                Step::HashtagSymbolRemoval => cfg.hashtag_symbol_removal = true,
                Step::Stemming(lang) => cfg.stemming = Some(lang.clone()),
                Step::Downcasing => cfg.downcasing = true,
                Step::Ngrams(ns) => {
                    cfg.ngrams.extend(ns);
                    cfg.ngrams.sort_unstable();
                    cfg.ngrams.dedup();
                }
                Step::Lemmatizing => cfg.lemmatizing = true,
                Step::SynsetAdder => cfg.synset_adder = true,
                Step::HypernymAdder(level) => cfg.hypernym_adder = Some(*level),
                Step::Disambiguator => cfg.disambiguator = true,
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.min_token_length == Some(0) {
            return Err(Error::Config("min_token_length must be at least 1".into()));
        }
        if let Some(n) = self.ngrams.iter().find(|n| !matches!(n, 2 | 3)) {
            return Err(Error::Config(format!("n-gram order {n} not in {{2, 3}}")));
        }
        if self.hypernym_adder == Some(0) {
            return Err(Error::Config("hypernym level must be at least 1".into()));
        }
        if self.disambiguator && !self.synset_adder {
            return Err(Error::Config("disambiguator requires synset_adder".into()));
        }
        Ok(())
    }

    pub fn uses_semantics(&self) -> bool {
        self.lemmatizing || self.synset_adder || self.hypernym_adder.is_some()
    }
}
