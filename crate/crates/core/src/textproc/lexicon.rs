//! Lexical resource: lemmas, ordered synsets and a hypernym forest.
//!
//! File format, one entry per line, fields separated by tabs:
//!
//! ```text
//! # comment
//! LEMMA
//! autos	auto
//! SYNSET
//! auto	s1	s2
//! HYPERNYM
//! s1	s9
//! ```
//!
//! Synsets are listed most probable first.

#![allow(clippy::tabs_in_doc_comments)]

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalResource {
    pub lemmas: BTreeMap<String, String>,
    pub synsets: BTreeMap<String, Vec<String>>,
    pub hypernyms: BTreeMap<String, String>,
}

#[derive(Clone, Copy)]
enum Section {
    Lemma,
    Synset,
    Hypernym,
}

impl LexicalResource {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lex = LexicalResource::default();
        let mut section = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            match line.trim() {
                "LEMMA" => {
                    section = Some(Section::Lemma);
                    continue;
                }
                "SYNSET" => {
                    section = Some(Section::Synset);
                    continue;
                }
                "HYPERNYM" => {
                    section = Some(Section::Hypernym);
                    continue;
                }
                _ => {}
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let err = |message: &str| Error::Lexicon {
                line: line_no,
                message: message.to_string(),
            };
            if fields.iter().any(|f| f.is_empty()) {
                return Err(err("empty field"));
            }
            match section {
                None => return Err(err("entry before any section header")),
                Some(Section::Lemma) => {
                    let [surface, lemma] = fields[..] else {
                        return Err(err("LEMMA entries need exactly two fields"));
                    };
                    lex.lemmas.insert(surface.to_string(), lemma.to_string());
                }
                Some(Section::Synset) => {
                    if fields.len() < 2 {
                        return Err(err("SYNSET entries need a lemma and at least one synset"));
                    }
                    lex.synsets
                        .entry(fields[0].to_string())
                        .or_default()
                        .extend(fields[1..].iter().map(|s| s.to_string()));
                }
                Some(Section::Hypernym) => {
                    let [child, parent] = fields[..] else {
                        return Err(err("HYPERNYM entries need exactly two fields"));
                    };
                    if lex
                        .hypernyms
                        .insert(child.to_string(), parent.to_string())
                        .is_some()
                    {
                        return Err(err("synset has more than one hypernym"));
                    }
                }
            }
        }
        lex.validate()?;
        Ok(lex)
    }

    /// Hypernym graph acyclic; every synset in the hypernym map is known
    /// either as some lemma's synset or as another synset's parent.
    pub fn validate(&self) -> Result<()> {
        let invalid = |message: String| Error::Lexicon { line: 0, message };
        let known: HashSet<&str> = self
            .synsets
            .values()
            .flatten()
            .map(String::as_str)
            .chain(self.hypernyms.values().map(String::as_str))
            .collect();
        for (child, parent) in &self.hypernyms {
            if !known.contains(child.as_str()) {
                return Err(invalid(format!(
                    "hypernym entry for unknown synset {child}"
                )));
            }
            let mut seen = HashSet::from([child.as_str()]);
            let mut cur = parent.as_str();
            loop {
                if !seen.insert(cur) {
                    return Err(invalid(format!("hypernym cycle through {cur}")));
                }
                match self.hypernyms.get(cur) {
                    Some(next) => cur = next,
                    None => break,
                }
            }
        }
        Ok(())
    }

    pub fn lemma<'a>(&'a self, token: &'a str) -> &'a str {
        self.lemmas.get(token).map(String::as_str).unwrap_or(token)
    }

    pub fn synsets_of(&self, lemma: &str) -> &[String] {
        self.synsets.get(lemma).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Ancestor `level` steps up the hypernym chain. When the chain is
    /// shorter, the topmost ancestor (possibly `synset` itself) is returned.
    pub fn ancestor<'a>(&'a self, synset: &'a str, level: usize) -> &'a str {
        let mut cur = synset;
        for _ in 0..level {
            match self.hypernyms.get(cur) {
                Some(parent) => cur = parent,
                None => break,
            }
        }
        cur
    }
}

/// Small bundled lexicon for tests and examples.
pub const TOY_LEXICON: &str = include_str!("../../data/toy_lexicon.tsv");
