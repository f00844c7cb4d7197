use crate::textproc::config::PipelineConfig;
use crate::textproc::lexicon::LexicalResource;
use crate::textproc::TokenSequence;

pub const SYNSET_PREFIX: &str = "syn:";

/// Lemmatizes in place, then appends synset and hypernym tokens after the
/// original sequence. For each source token, its synset tokens come first,
/// then its hypernym tokens. Tokens missing from the lexicon pass through.
pub fn semantic_expand(
    tokens: &TokenSequence,
    cfg: &PipelineConfig,
    lex: &LexicalResource,
) -> TokenSequence {
    let base: Vec<String> = if cfg.lemmatizing {
        tokens.iter().map(|t| lex.lemma(t).to_string()).collect()
    } else {
        tokens.0.clone()
    };
    let mut extra = Vec::new();
    if cfg.synset_adder || cfg.hypernym_adder.is_some() {
        for tok in &base {
            let all = lex.synsets_of(lex.lemma(tok));
            let used = if cfg.disambiguator {
                &all[..all.len().min(1)]
            } else {
                all
            };
            if cfg.synset_adder {
                extra.extend(used.iter().map(|s| format!("{SYNSET_PREFIX}{s}")));
            }
            if let Some(level) = cfg.hypernym_adder {
                extra.extend(
                    used.iter()
                        .map(|s| format!("{SYNSET_PREFIX}{}", lex.ancestor(s, level))),
                );
            }
        }
    }
    let mut out = base;
    out.extend(extra);
    TokenSequence(out)
}
