//! Lexicon-based sentiment strength and author-gender annotations.
//!
//! Lexicon files are tab-separated `term<TAB>value` lines after a header
//! line `kind<TAB>sentiment` or `kind<TAB>names`. Blank lines and lines
//! starting with `#` are ignored.
//!
//! Sentiment values are integer strengths in [-5, 5] or the words
//! `negation` / `booster`. Name values are `male`, `female` or `unisex`.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const TOY_SENTIMENT_LEXICON: &str = include_str!("../data/toy_sentiment.tsv");
pub const TOY_NAME_LEXICON: &str = include_str!("../data/toy_names.tsv");

/// Dual-polarity strengths, each in 1..=5 (1 = none).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentiment {
    pub positive: u8,
    pub negative: u8,
}

impl Sentiment {
    pub const NEUTRAL: Sentiment = Sentiment {
        positive: 1,
        negative: 1,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
    Unknown,
}

impl std::str::FromStr for Gender {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "male" => Ok(Gender::Male),
            "female" => Ok(Gender::Female),
            "unknown" => Ok(Gender::Unknown),
            _ => Err(Error::InvalidInput(format!("unknown gender {s:?}"))),
        }
    }
}

pub trait SentimentModel: Send + Sync {
    fn score(&self, text: &str) -> Sentiment;
}

pub trait GenderModel: Send + Sync {
    fn predict(&self, author_name: Option<&str>) -> Gender;
}

/// Splits on anything that is not a letter or digit, lowercased.
fn words(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Yields `(line number, term, value)` for the body of a lexicon of `kind`.
fn entries<'a>(text: &'a str, kind: &str) -> Result<Vec<(usize, &'a str, &'a str)>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let Some((hline, header)) = lines.next() else {
        return Err(Error::Lexicon {
            line: 1,
            message: "empty lexicon file".into(),
        });
    };
    match header.split_once('\t') {
        Some(("kind", k)) if k.trim() == kind => {}
        _ => {
            return Err(Error::Lexicon {
                line: hline,
                message: format!("expected header \"kind\\t{kind}\", found {header:?}"),
            })
        }
    }
    lines
        .map(|(n, l)| match l.split_once('\t') {
            Some((t, v)) if !t.trim().is_empty() => Ok((n, t.trim(), v.trim())),
            _ => Err(Error::Lexicon {
                line: n,
                message: format!("expected term<TAB>value, found {l:?}"),
            }),
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SentimentLexicon {
    strengths: HashMap<String, i8>,
    negations: HashSet<String>,
    boosters: HashSet<String>,
}

impl SentimentLexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = SentimentLexicon::default();
        for (line, term, value) in entries(text, "sentiment")? {
            let term = term.to_lowercase();
            match value {
                "negation" => {
                    lex.negations.insert(term);
                }
                "booster" => {
                    lex.boosters.insert(term);
                }
                v => {
                    let s: i8 = v.parse().map_err(|_| Error::Lexicon {
                        line,
                        message: format!("bad strength {v:?}"),
                    })?;
                    if !(-5..=5).contains(&s) {
                        return Err(Error::Lexicon {
                            line,
                            message: format!("strength {s} outside [-5, 5]"),
                        });
                    }
                    lex.strengths.insert(term, s);
                }
            }
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn toy() -> Self {
        Self::parse(TOY_SENTIMENT_LEXICON).expect("bundled lexicon parses")
    }

    pub fn len(&self) -> usize {
        self.strengths.len() + self.negations.len() + self.boosters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl SentimentModel for SentimentLexicon {
    /// Max positive and max negative term strength, floored at 1. A booster
    /// right before a term adds 1 to its magnitude (capped at 5); a negation
    /// within the two tokens before a term flips its sign.
    fn score(&self, text: &str) -> Sentiment {
        let toks = words(text);
        let (mut pos, mut neg) = (1i8, 1i8);
        for (i, t) in toks.iter().enumerate() {
            let Some(&s) = self.strengths.get(t) else {
                continue;
            };
            if s == 0 {
                continue;
            }
            let boosted = i >= 1 && self.boosters.contains(&toks[i - 1]);
            let mag = (s.abs() + boosted as i8).min(5);
            let negated = toks[i.saturating_sub(2)..i]
                .iter()
                .any(|w| self.negations.contains(w));
            let positive = (s > 0) != negated;
            if positive {
                pos = pos.max(mag);
            } else {
                neg = neg.max(mag);
            }
        }
        Sentiment {
            positive: pos as u8,
            negative: neg as u8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NameClass {
    Male,
    Female,
    Unisex,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NameLexicon {
    names: HashMap<String, NameClass>,
}

impl NameLexicon {
    pub fn parse(text: &str) -> Result<Self> {
        let mut names = HashMap::new();
        for (line, term, value) in entries(text, "names")? {
            let class = match value {
                "male" => NameClass::Male,
                "female" => NameClass::Female,
                "unisex" => NameClass::Unisex,
                v => {
                    return Err(Error::Lexicon {
                        line,
                        message: format!("bad name class {v:?}"),
                    })
                }
            };
            names.insert(term.to_lowercase(), class);
        }
        Ok(NameLexicon { names })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn toy() -> Self {
        Self::parse(TOY_NAME_LEXICON).expect("bundled lexicon parses")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

impl GenderModel for NameLexicon {
    /// Looks up the first whitespace token of the display name.
    fn predict(&self, author_name: Option<&str>) -> Gender {
        let first = author_name.and_then(|n| n.split_whitespace().next());
        match first.and_then(|f| self.names.get(&f.to_lowercase())) {
            Some(NameClass::Male) => Gender::Male,
            Some(NameClass::Female) => Gender::Female,
            Some(NameClass::Unisex) | None => Gender::Unknown,
        }
    }
}
