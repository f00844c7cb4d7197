use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::textproc::TokenSequence;

/// Token to column mapping. Columns are assigned in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    fitted_on: String,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    fitted_on: String,
    tokens: Vec<String>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            tokens: r.tokens,
            index,
            fitted_on: r.fitted_on,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            fitted_on: v.fitted_on,
            tokens: v.tokens,
        }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, column: u32) -> Option<&str> {
        self.tokens.get(column as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn fitted_on(&self) -> &str {
        &self.fitted_on
    }
}

pub fn build_vocabulary<'a, I>(docs: I, fitted_on: impl Into<String>) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a TokenSequence>,
{
    let mut tokens = Vec::new();
    let mut index = HashMap::new();
    for doc in docs {
        for tok in doc.iter() {
            if !index.contains_key(tok) {
                index.insert(tok.clone(), tokens.len() as u32);
                tokens.push(tok.clone());
            }
        }
    }
    if tokens.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Ok(Vocabulary {
        tokens,
        index,
        fitted_on: fitted_on.into(),
    })
}

/// Sparse non-negative feature vector. Indices strictly increasing, values
/// strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn empty(dim: usize) -> Self {
        FeatureVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from (index, value) pairs in any order. Zero entries are
    /// dropped, duplicate indices summed.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (i, v) in pairs {
            if i as usize >= dim {
                return Err(Error::InvalidInput(format!(
                    "feature index {i} outside dimension {dim}"
                )));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "feature value {v} at index {i}"
                )));
            }
            *acc.entry(i).or_default() += v;
        }
        acc.retain(|_, v| *v > 0.0);
        Ok(FeatureVector {
            dim,
            indices: acc.keys().copied().collect(),
            values: acc.values().copied().collect(),
        })
    }

    pub fn from_dense(values: &[f64]) -> Result<Self> {
        Self::from_pairs(
            values.len(),
            values.iter().enumerate().map(|(i, &v)| (i as u32, v)),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, index: u32) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn l1(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i as usize] = v;
        }
        out
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i as usize]).sum()
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> f64 {
        let (mut a, mut b) = (0, 0);
        let mut acc = 0.0;
        while a < self.indices.len() || b < other.indices.len() {
            let ia = self.indices.get(a).copied().unwrap_or(u32::MAX);
            let ib = other.indices.get(b).copied().unwrap_or(u32::MAX);
            let d = if ia == ib {
                let d = self.values[a] - other.values[b];
                a += 1;
                b += 1;
                d
            } else if ia < ib {
                a += 1;
                self.values[a - 1]
            } else {
                b += 1;
                other.values[b - 1]
            };
            acc += d * d;
        }
        acc
    }

    /// `self + u * (other - self)`, the SMOTE interpolation.
    pub fn interpolate(&self, other: &FeatureVector, u: f64) -> FeatureVector {
        let (a, b) = (self.to_dense(), other.to_dense());
        let pairs = a
            .iter()
            .zip(&b)
            .enumerate()
            .map(|(i, (x, y))| (i as u32, x + u * (y - x)));
        FeatureVector::from_pairs(self.dim, pairs).expect("interpolation of valid vectors")
    }
}

/// Term-frequency vector over the vocabulary; out-of-vocabulary tokens are
/// dropped.
pub fn vectorize(tokens: &TokenSequence, vocab: &Vocabulary) -> FeatureVector {
    let mut counts: BTreeMap<u32, f64> = BTreeMap::new();
    for tok in tokens.iter() {
        if let Some(i) = vocab.get(tok) {
            *counts.entry(i).or_default() += 1.0;
        }
    }
    FeatureVector {
        dim: vocab.len(),
        indices: counts.keys().copied().collect(),
        values: counts.values().copied().collect(),
    }
}
