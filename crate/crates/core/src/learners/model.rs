//! Model files: a JSON envelope holding the classifier together with the
//! pipeline config, lexicon and vocabulary it was trained with, so a loaded
//! model maps raw text straight to a label.
//!
//! JSON keeps the format byte-order independent; floats are written with
//! shortest round-trip formatting so reloaded models score bit-identically.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{train, AlgorithmSpec, Classifier};
use crate::sampling::{apply_sampling, SamplingSpec};
use crate::textproc::{
    build_vocabulary, vectorize, FeatureVector, LexicalResource, Pipeline, PipelineConfig,
    TokenSequence, Vocabulary,
};

pub const MODEL_FORMAT: &str = "needminer-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A classifier bound to the text pipeline and vocabulary it was fitted with.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    spec: AlgorithmSpec,
    sampling: Option<SamplingSpec>,
    classifier: Classifier,
    vocabulary: Vocabulary,
    pipeline: Arc<Pipeline>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    format_version: u32,
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format: String,
    format_version: u32,
    algorithm: AlgorithmSpec,
    #[serde(default)]
    sampling: Option<SamplingSpec>,
    pipeline: PipelineConfig,
    #[serde(default)]
    lexicon: Option<LexicalResource>,
    vocabulary: Vocabulary,
    classifier: Classifier,
}

impl TrainedModel {
    /// Tokenizes, fits a vocabulary on the training texts, optionally
    /// rebalances, then trains.
    pub fn fit(
        spec: &AlgorithmSpec,
        sampling: Option<&SamplingSpec>,
        pipeline: Arc<Pipeline>,
        docs: &[(&str, bool)],
        fitted_on: &str,
    ) -> Result<TrainedModel> {
        let tokens: Vec<(TokenSequence, bool)> =
            docs.iter().map(|(t, y)| (pipeline.tokens(t), *y)).collect();
        Self::fit_tokens(spec, sampling, pipeline, &tokens, fitted_on)
    }

    /// As [`fit`](Self::fit) for documents already run through `pipeline`.
    pub fn fit_tokens(
        spec: &AlgorithmSpec,
        sampling: Option<&SamplingSpec>,
        pipeline: Arc<Pipeline>,
        docs: &[(TokenSequence, bool)],
        fitted_on: &str,
    ) -> Result<TrainedModel> {
        let vocabulary = build_vocabulary(docs.iter().map(|(t, _)| t), fitted_on)?;
        let xs: Vec<FeatureVector> = docs
            .iter()
            .map(|(t, _)| vectorize(t, &vocabulary))
            .collect();
        let ys: Vec<bool> = docs.iter().map(|(_, y)| *y).collect();
        let classifier = match sampling {
            Some(s) => {
                let r = apply_sampling(&xs, &ys, s)?;
                train(spec, &r.xs, &r.ys)?
            }
            None => train(spec, &xs, &ys)?,
        };
        Ok(TrainedModel {
            spec: *spec,
            sampling: sampling.cloned(),
            classifier,
            vocabulary,
            pipeline,
        })
    }

    pub fn spec(&self) -> &AlgorithmSpec {
        &self.spec
    }

    pub fn sampling(&self) -> Option<&SamplingSpec> {
        self.sampling.as_ref()
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn pipeline(&self) -> &Arc<Pipeline> {
        &self.pipeline
    }

    pub fn vectorize(&self, text: &str) -> FeatureVector {
        vectorize(&self.pipeline.tokens(text), &self.vocabulary)
    }

    pub fn score_text(&self, text: &str) -> f64 {
        // the vector always has the vocabulary's dimension
        self.classifier
            .score(&self.vectorize(text))
            .expect("vocabulary and classifier dimensions agree")
    }

    pub fn predict_text(&self, text: &str) -> bool {
        self.score_text(text) > 0.5
    }

    pub fn to_json(&self) -> String {
        let env = Envelope {
            format: MODEL_FORMAT.into(),
            format_version: MODEL_FORMAT_VERSION,
            algorithm: self.spec,
            sampling: self.sampling,
            pipeline: self.pipeline.config().clone(),
            lexicon: self.pipeline.lexicon().map(|l| (**l).clone()),
            vocabulary: self.vocabulary.clone(),
            classifier: self.classifier.clone(),
        };
        serde_json::to_string(&env).expect("model serializes")
    }

    /// Parses a model file's contents. The header is checked before the
    /// body so a newer file reports a version error, not a parse error.
    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let header: Header = serde_json::from_str::<serde_json::Value>(text)
            .and_then(serde_json::from_value)
            .map_err(|e| corrupt(text, &e))?;
        if header.format != MODEL_FORMAT {
            return Err(Error::CorruptModel {
                offset: 0,
                message: format!("not a model file (format {:?})", header.format),
            });
        }
        if header.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelVersion {
                found: header.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let env: Envelope = serde_json::from_str(text).map_err(|e| corrupt(text, &e))?;
        let bad = |message: String| Error::CorruptModel { offset: 0, message };
        if env.classifier.dim() != env.vocabulary.len() {
            return Err(bad(format!(
                "classifier dimension {} but vocabulary has {} entries",
                env.classifier.dim(),
                env.vocabulary.len()
            )));
        }
        if let Some(lex) = &env.lexicon {
            lex.validate()?;
        }
        let pipeline = Pipeline::new(env.pipeline, env.lexicon.map(Arc::new))?;
        Ok(TrainedModel {
            spec: env.algorithm,
            sampling: env.sampling,
            classifier: env.classifier,
            vocabulary: env.vocabulary,
            pipeline: Arc::new(pipeline),
        })
    }
}

/// Translates serde_json's line/column into the byte offset just past the
/// point where parsing stopped.
fn corrupt(text: &str, e: &serde_json::Error) -> Error {
    let offset = if e.line() == 0 {
        0
    } else {
        let line_start: usize = text
            .split_inclusive('\n')
            .take(e.line() - 1)
            .map(str::len)
            .sum();
        (line_start + e.column()).min(text.len())
    };
    Error::CorruptModel {
        offset,
        message: e.to_string(),
    }
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model.to_json()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainedModel::from_json(&text)
}
