//! Multinomial naive Bayes with additive smoothing.

use serde::{Deserialize, Serialize};

use crate::learners::NaiveBayesParams;
use crate::textproc::FeatureVector;

/// Fitted model. Only the sufficient statistics are serialized; the log
/// tables are rebuilt on load, so a reloaded model scores bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "NaiveBayesStats", into = "NaiveBayesStats")]
pub struct NaiveBayes {
    stats: NaiveBayesStats,
    log_prior: [f64; 2],
    log_likelihood: [Vec<f64>; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NaiveBayesStats {
    alpha: f64,
    dim: usize,
    /// Documents per class, `[negative, positive]`.
    class_docs: [f64; 2],
    /// Summed term counts per class and feature.
    feature_counts: [Vec<f64>; 2],
}

impl From<NaiveBayesStats> for NaiveBayes {
    fn from(stats: NaiveBayesStats) -> Self {
        let total_docs = stats.class_docs[0] + stats.class_docs[1];
        let log_prior = [
            (stats.class_docs[0] / total_docs).ln(),
            (stats.class_docs[1] / total_docs).ln(),
        ];
        let table = |counts: &Vec<f64>| -> Vec<f64> {
            let total: f64 = counts.iter().sum();
            let denom = total + stats.alpha * stats.dim as f64;
            if denom <= 0.0 {
                return vec![-(stats.dim as f64).ln(); stats.dim];
            }
            counts
                .iter()
                .map(|c| ((c + stats.alpha) / denom).ln())
                .collect()
        };
        let log_likelihood = [
            table(&stats.feature_counts[0]),
            table(&stats.feature_counts[1]),
        ];
        NaiveBayes {
            stats,
            log_prior,
            log_likelihood,
        }
    }
}

impl From<NaiveBayes> for NaiveBayesStats {
    fn from(m: NaiveBayes) -> Self {
        m.stats
    }
}

impl NaiveBayes {
    pub(crate) fn fit(params: &NaiveBayesParams, xs: &[FeatureVector], ys: &[bool]) -> NaiveBayes {
        let dim = xs[0].dim();
        let mut class_docs = [0.0; 2];
        let mut feature_counts = [vec![0.0; dim], vec![0.0; dim]];
        for (x, &y) in xs.iter().zip(ys) {
            let c = y as usize;
            class_docs[c] += 1.0;
            for (i, v) in x.iter() {
                feature_counts[c][i as usize] += v;
            }
        }
        NaiveBayesStats {
            alpha: params.alpha,
            dim,
            class_docs,
            feature_counts,
        }
        .into()
    }

    pub fn dim(&self) -> usize {
        self.stats.dim
    }

    fn joint_log(&self, x: &FeatureVector, class: usize) -> f64 {
        let ll = &self.log_likelihood[class];
        self.log_prior[class] + x.iter().map(|(i, v)| v * ll[i as usize]).sum::<f64>()
    }

    /// Class posteriors `[negative, positive]`.
    pub fn posteriors(&self, x: &FeatureVector) -> [f64; 2] {
        let a = self.joint_log(x, 0);
        let b = self.joint_log(x, 1);
        let m = a.max(b);
        if m == f64::NEG_INFINITY || m.is_nan() {
            return [0.5, 0.5];
        }
        let lse = m + ((a - m).exp() + (b - m).exp()).ln();
        [(a - lse).exp(), (b - lse).exp()]
    }

    pub fn score(&self, x: &FeatureVector) -> f64 {
        self.posteriors(x)[1]
    }
}
