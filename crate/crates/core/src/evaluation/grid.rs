use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::{
    AlgorithmKind, AlgorithmParams, Loss, NaiveBayesParams, PegasosParams, RandomForestParams,
};

/// Per-parameter value lists for one algorithm family. Cells enumerate in
/// canonical order: fields in declaration order, the last varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    NaiveBayes {
        alpha: Vec<f64>,
    },
    RandomForest {
        bag_fraction: Vec<f64>,
        trees: Vec<usize>,
        features: Vec<usize>,
        max_depth: Vec<Option<usize>>,
    },
    PegasosSvm {
        lambda: Vec<f64>,
        epochs: Vec<usize>,
    },
    /// An explicit cell list, for custom or single-cell searches.
    Cells {
        cells: Vec<AlgorithmParams>,
    },
}

impl GridSpec {
    pub fn default_for(kind: AlgorithmKind) -> GridSpec {
        match kind {
            AlgorithmKind::NaiveBayes => GridSpec::NaiveBayes {
                alpha: vec![0.1, 0.5, 1.0, 2.0],
            },
            AlgorithmKind::RandomForest => GridSpec::RandomForest {
                bag_fraction: vec![0.6, 0.8, 1.0],
                trees: (1..=5).map(|i| i * 100).collect(),
                features: vec![50, 100, 200],
                max_depth: (2..=10).map(|i| Some(i * 50)).collect(),
            },
            AlgorithmKind::PegasosSvm => GridSpec::PegasosSvm {
                lambda: vec![1e-4, 1e-3, 1e-2, 1e-1],
                epochs: vec![20, 50],
            },
        }
    }

    pub fn single(params: AlgorithmParams) -> GridSpec {
        GridSpec::Cells {
            cells: vec![params],
        }
    }

    pub fn size(&self) -> usize {
        match self {
            GridSpec::NaiveBayes { alpha } => alpha.len(),
            GridSpec::RandomForest {
                bag_fraction,
                trees,
                features,
                max_depth,
            } => bag_fraction.len() * trees.len() * features.len() * max_depth.len(),
            GridSpec::PegasosSvm { lambda, epochs } => lambda.len() * epochs.len(),
            GridSpec::Cells { cells } => cells.len(),
        }
    }

    pub fn cells(&self) -> Result<Vec<AlgorithmParams>> {
        if self.size() == 0 {
            return Err(Error::Config("grid has no cells".into()));
        }
        let cells: Vec<AlgorithmParams> = match self {
            GridSpec::NaiveBayes { alpha } => alpha
                .iter()
                .map(|&alpha| AlgorithmParams::NaiveBayes(NaiveBayesParams { alpha }))
                .collect(),
            GridSpec::RandomForest {
                bag_fraction,
                trees,
                features,
                max_depth,
            } => {
                let mut out = Vec::with_capacity(self.size());
                for &p in bag_fraction {
                    for &l in trees {
                        for &k in features {
                            for &d in max_depth {
                                out.push(AlgorithmParams::RandomForest(RandomForestParams {
                                    bag_fraction: p,
                                    trees: l,
                                    features: k,
                                    max_depth: d,
                                }));
                            }
                        }
                    }
                }
                out
            }
            GridSpec::PegasosSvm { lambda, epochs } => {
                let mut out = Vec::with_capacity(self.size());
                for &lambda in lambda {
                    for &epochs in epochs {
                        out.push(AlgorithmParams::PegasosSvm(PegasosParams {
                            lambda,
                            epochs,
                            loss: Loss::Hinge,
                        }));
                    }
                }
                out
            }
            GridSpec::Cells { cells } => cells.clone(),
        };
        for c in &cells {
            c.validate()?;
        }
        Ok(cells)
    }
}
