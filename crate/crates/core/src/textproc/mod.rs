//! Tweet text to sparse term-frequency vectors.

mod config;
pub mod lexicon;
mod normalize;
mod semantic;
mod stem;
mod vocab;

use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use config::{PipelineConfig, Step};
pub use lexicon::LexicalResource;
pub use semantic::{semantic_expand, SYNSET_PREFIX};
pub use stem::StemLanguage;
pub use vocab::{build_vocabulary, vectorize, FeatureVector, Vocabulary};

use crate::error::{Error, Result};
use stem::Stemmer;

/// Ordered tokens of one document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence(pub Vec<String>);

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

/// Syntactic preprocessing only.
pub fn normalize(text: &str, cfg: &PipelineConfig) -> TokenSequence {
    let stemmer = cfg.stemming.as_ref().map(Stemmer::new);
    normalize::normalize_with(text, cfg, stemmer.as_ref())
}

/// POS tagging hook. The shipped tagger is a no-op.
pub trait PosTagger: Send + Sync {
    fn tag(&self, tokens: TokenSequence) -> TokenSequence;
}

pub struct NoopTagger;

impl PosTagger for NoopTagger {
    fn tag(&self, tokens: TokenSequence) -> TokenSequence {
        tokens
    }
}

/// A validated config with its stemmer and (when needed) lexicon.
pub struct Pipeline {
    config: PipelineConfig,
    lexicon: Option<Arc<LexicalResource>>,
    stemmer: Option<Stemmer>,
}

impl std::fmt::Debug for Pipeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Pipeline")
            .field("config", &self.config)
            .field("lexicon", &self.lexicon.is_some())
            .finish()
    }
}

impl Pipeline {
    pub fn new(config: PipelineConfig, lexicon: Option<Arc<LexicalResource>>) -> Result<Self> {
        config.validate()?;
        if config.uses_semantics() && lexicon.is_none() {
            return Err(Error::Config(
                "semantic steps enabled but no lexical resource given".into(),
            ));
        }
        let stemmer = config.stemming.as_ref().map(Stemmer::new);
        Ok(Pipeline {
            config,
            lexicon,
            stemmer,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn lexicon(&self) -> Option<&Arc<LexicalResource>> {
        self.lexicon.as_ref()
    }

    pub fn tokens(&self, text: &str) -> TokenSequence {
        let toks = normalize::normalize_with(text, &self.config, self.stemmer.as_ref());
        match &self.lexicon {
            Some(lex) if self.config.uses_semantics() => semantic_expand(&toks, &self.config, lex),
            _ => toks,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn semantic_steps_need_a_lexicon() {
        let cfg = PipelineConfig {
            synset_adder: true,
            ..Default::default()
        };
        assert!(Pipeline::new(cfg.clone(), None).is_err());
        let lex = Arc::new(LexicalResource::parse(lexicon::TOY_LEXICON).unwrap());
        let p = Pipeline::new(cfg, Some(lex)).unwrap();
        assert_eq!(
            p.tokens("auto").0,
            vec!["auto", "syn:s_auto", "syn:s_waggon"]
        );
    }

    #[test]
    fn recommended_config_stems_german() {
        let p = Pipeline::new(PipelineConfig::recommended(), None).unwrap();
        assert_eq!(
            p.tokens("RT @x Mehr Ladesäulen!!").0,
            p.tokens("mehr ladesäule").0
        );
    }

    proptest! {
        #[test]
        fn step_declaration_order_never_matters(
            text in "[ a-zA-Z@#!\\-]{0,40}",
            perm in Just(vec![
                Step::Downcasing,
                Step::UsernameRemoval,
                Step::MinTokenLength(2),
                Step::HashtagSymbolRemoval,
                Step::SpecialCharRemoval,
                Step::RetweetTagRemoval,
                Step::Ngrams(vec![2]),
            ]).prop_shuffle(),
        ) {
            let canonical = PipelineConfig::from_steps(&[
                Step::UsernameRemoval,
                Step::RetweetTagRemoval,
                Step::SpecialCharRemoval,
                Step::MinTokenLength(2),
                Step::HashtagSymbolRemoval,
                Step::Downcasing,
                Step::Ngrams(vec![2]),
            ]).unwrap();
            let shuffled = PipelineConfig::from_steps(&perm).unwrap();
            prop_assert_eq!(normalize(&text, &shuffled), normalize(&text, &canonical));
        }

        #[test]
        fn vector_mass_equals_kept_tokens(text in "[ a-zA-Z@#!äöü]{0,60}") {
            let cfg = PipelineConfig::recommended();
            let toks = normalize(&text, &cfg);
            if !toks.is_empty() {
                let v = build_vocabulary([&toks], "self").unwrap();
                prop_assert_eq!(vectorize(&toks, &v).l1() as usize, toks.len());
            }
        }
    }
}
