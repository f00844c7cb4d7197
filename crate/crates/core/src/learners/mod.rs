//! Classifier families: multinomial naive Bayes, random forest and a
//! Pegasos linear SVM.
//!
//! DMNB, Bayes nets, SMO and neural networks are not implemented; a new
//! family slots in as another [`AlgorithmParams`] / [`Classifier`] variant.

pub mod forest;
mod model;
pub mod naive_bayes;
pub mod pegasos;

use serde::{Deserialize, Serialize};

pub use forest::RandomForest;
pub use model::{load_model, save_model, TrainedModel, MODEL_FORMAT, MODEL_FORMAT_VERSION};
pub use naive_bayes::NaiveBayes;
pub use pegasos::Pegasos;

use crate::error::{Error, Result};
use crate::textproc::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesParams {
    pub alpha: f64,
}

impl Default for NaiveBayesParams {
    fn default() -> Self {
        NaiveBayesParams { alpha: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomForestParams {
    /// Bag size as a fraction of the training set, in (0, 1].
    pub bag_fraction: f64,
    pub trees: usize,
    /// Features sampled per split.
    pub features: usize,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
}

impl Default for RandomForestParams {
    fn default() -> Self {
        RandomForestParams {
            bag_fraction: 0.8,
            trees: 100,
            features: 100,
            max_depth: Some(200),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    #[default]
    Hinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PegasosParams {
    pub lambda: f64,
    pub epochs: usize,
    #[serde(default)]
    pub loss: Loss,
}

impl Default for PegasosParams {
    fn default() -> Self {
        PegasosParams {
            lambda: 0.01,
            epochs: 50,
            loss: Loss::Hinge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    NaiveBayes,
    RandomForest,
    PegasosSvm,
}

impl AlgorithmKind {
    pub fn default_params(self) -> AlgorithmParams {
        match self {
            AlgorithmKind::NaiveBayes => AlgorithmParams::NaiveBayes(Default::default()),
            AlgorithmKind::RandomForest => AlgorithmParams::RandomForest(Default::default()),
            AlgorithmKind::PegasosSvm => AlgorithmParams::PegasosSvm(Default::default()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlgorithmParams {
    NaiveBayes(NaiveBayesParams),
    RandomForest(RandomForestParams),
    PegasosSvm(PegasosParams),
}

impl AlgorithmParams {
    pub fn kind(&self) -> AlgorithmKind {
        match self {
            AlgorithmParams::NaiveBayes(_) => AlgorithmKind::NaiveBayes,
            AlgorithmParams::RandomForest(_) => AlgorithmKind::RandomForest,
            AlgorithmParams::PegasosSvm(_) => AlgorithmKind::PegasosSvm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match *self {
            AlgorithmParams::NaiveBayes(p) if p.alpha.is_nan() || p.alpha < 0.0 => {
                bad(format!("alpha {} < 0", p.alpha))
            }
            AlgorithmParams::RandomForest(p)
                if !(p.bag_fraction > 0.0 && p.bag_fraction <= 1.0) =>
            {
                bad(format!("bag fraction {} outside (0, 1]", p.bag_fraction))
            }
            AlgorithmParams::RandomForest(p) if p.trees == 0 => {
                bad("forest needs at least one tree".into())
            }
            AlgorithmParams::RandomForest(p) if p.features == 0 => {
                bad("features per split must be >= 1".into())
            }
            AlgorithmParams::RandomForest(p) if p.max_depth == Some(0) => {
                bad("tree depth must be >= 1".into())
            }
            AlgorithmParams::PegasosSvm(p) if p.lambda.is_nan() || p.lambda <= 0.0 => {
                bad(format!("lambda {} must be > 0", p.lambda))
            }
            AlgorithmParams::PegasosSvm(p) if p.epochs == 0 => bad("epochs must be >= 1".into()),
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for AlgorithmParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AlgorithmParams::NaiveBayes(p) => write!(f, "alpha={}", p.alpha),
            AlgorithmParams::RandomForest(p) => {
                let d = p.max_depth.map_or("inf".to_string(), |d| d.to_string());
                write!(
                    f,
                    "p={} l={} K={} d={}",
                    p.bag_fraction, p.trees, p.features, d
                )
            }
            AlgorithmParams::PegasosSvm(p) => write!(f, "lambda={} epochs={}", p.lambda, p.epochs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub params: AlgorithmParams,
    pub seed: u64,
}

impl AlgorithmSpec {
    pub fn new(params: AlgorithmParams, seed: u64) -> Self {
        AlgorithmSpec { params, seed }
    }
}

/// A fitted classifier over feature vectors of one fixed dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "snake_case")]
pub enum Classifier {
    NaiveBayes(NaiveBayes),
    RandomForest(RandomForest),
    PegasosSvm(Pegasos),
}

impl Classifier {
    pub fn dim(&self) -> usize {
        match self {
            Classifier::NaiveBayes(m) => m.dim(),
            Classifier::RandomForest(m) => m.dim(),
            Classifier::PegasosSvm(m) => m.dim(),
        }
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        Ok(())
    }

    /// Positive-class score in [0, 1]: NB posterior, share of positive tree
    /// votes, or the squashed SVM margin.
    pub fn score(&self, x: &FeatureVector) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self {
            Classifier::NaiveBayes(m) => m.score(x),
            Classifier::RandomForest(m) => m.score(x),
            Classifier::PegasosSvm(m) => m.score(x),
        })
    }

    /// Positive iff the score exceeds 0.5; an exact tie is negative.
    pub fn predict(&self, x: &FeatureVector) -> Result<bool> {
        Ok(self.score(x)? > 0.5)
    }
}

/// Fits a classifier. Needs both classes and a single shared dimension.
pub fn train(spec: &AlgorithmSpec, xs: &[FeatureVector], ys: &[bool]) -> Result<Classifier> {
    spec.params.validate()?;
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "{} vectors but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if !(ys.iter().any(|&y| y) && ys.iter().any(|&y| !y)) {
        return Err(Error::SingleClass);
    }
    let dim = xs[0].dim();
    if let Some(bad) = xs.iter().find(|x| x.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.dim(),
        });
    }
    Ok(match &spec.params {
        AlgorithmParams::NaiveBayes(p) => Classifier::NaiveBayes(NaiveBayes::fit(p, xs, ys)),
        AlgorithmParams::RandomForest(p) => {
            Classifier::RandomForest(RandomForest::fit(p, xs, ys, spec.seed))
        }
        AlgorithmParams::PegasosSvm(p) => {
            Classifier::PegasosSvm(Pegasos::fit(p, xs, ys, spec.seed))
        }
    })
}
