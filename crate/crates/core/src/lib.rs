//! Need-tweet detection and need quantification for short-text corpora.
//!
//! The crate covers the offline half of the system: corpus handling, text
//! preprocessing, rebalancing, the three classifier families, the evaluation
//! harness (cross-validation, nested CV, baselines, learning curves,
//! cross-domain matrices), need-category models and the lexicon enrichers.

pub mod corpus;
pub mod enrich;
pub mod error;
pub mod evaluation;
pub mod learners;
pub mod needcat;
pub mod sampling;
pub mod seeds;
pub mod synth;
pub mod textproc;

pub use error::{Error, Result};
