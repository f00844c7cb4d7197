use std::sync::LazyLock;

use regex::Regex;

use crate::textproc::config::PipelineConfig;
use crate::textproc::stem::Stemmer;
use crate::textproc::TokenSequence;

static USERNAME_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").unwrap());

pub(crate) fn remove_usernames(text: &str) -> String {
    USERNAME_RE.replace_all(text, " ").into_owned()
}

pub(crate) fn is_retweet_tag(token: &str) -> bool {
    matches!(token, "RT" | "rt" | "RT:" | "rt:")
}

/// Splits a whitespace token into its alphanumeric runs. A hyphen survives
/// only between two alphanumerics, a `#` only as the first character of a
/// hashtag; everything else (punctuation, emoticons, emoji) separates.
pub(crate) fn strip_special(token: &str) -> Vec<String> {
    let chars: Vec<char> = token.chars().collect();
    let mut pieces = Vec::new();
    let mut cur = String::new();
    for (i, &c) in chars.iter().enumerate() {
        let keep = c.is_alphanumeric()
            || (c == '-'
                && i > 0
                && chars[i - 1].is_alphanumeric()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric()))
            || (c == '#' && i == 0 && chars.get(1).is_some_and(|n| n.is_alphanumeric()));
        if keep {
            cur.push(c);
        } else if !cur.is_empty() {
            pieces.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        pieces.push(cur);
    }
    pieces
}

pub(crate) fn strip_hashtag(token: &str) -> &str {
    token.trim_start_matches('#')
}

/// Syntactic preprocessing in canonical order: username removal, retweet
/// tag removal, special-character removal, downcasing, hashtag stripping,
/// length filter, stemming, n-gram augmentation.
pub(crate) fn normalize_with(
    text: &str,
    cfg: &PipelineConfig,
    stemmer: Option<&Stemmer>,
) -> TokenSequence {
    let text = if cfg.username_removal {
        remove_usernames(text)
    } else {
        text.to_string()
    };
    let mut tokens: Vec<String> = text
        .split_whitespace()
        .filter(|t| !(cfg.retweet_tag_removal && is_retweet_tag(t)))
        .map(str::to_string)
        .collect();
    if cfg.special_char_removal {
        tokens = tokens.iter().flat_map(|t| strip_special(t)).collect();
    }
    if cfg.downcasing {
        for t in &mut tokens {
            *t = t.to_lowercase();
        }
    }
    if cfg.hashtag_symbol_removal {
        tokens = tokens
            .iter()
            .map(|t| strip_hashtag(t))
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect();
    }
    if let Some(min) = cfg.min_token_length {
        tokens.retain(|t| t.chars().count() >= min);
    }
    if let Some(stemmer) = stemmer {
        tokens = tokens.iter().map(|t| stemmer.stem(t)).collect();
        tokens.retain(|t| !t.is_empty());
    }
    let unigrams = tokens.len();
    for &n in &cfg.ngrams {
        if n > unigrams {
            continue;
        }
        for i in 0..=unigrams - n {
            let gram = tokens[i..i + n].join("_");
            tokens.push(gram);
        }
    }
    TokenSequence(tokens)
}
