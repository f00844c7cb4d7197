//! Linear SVM trained by stochastic sub-gradient descent on the regularized
//! hinge loss (Pegasos), step size `1 / (lambda * t)`.
//!
//! The bias is an extra always-one feature and is regularized with the rest
//! of the weights. Each epoch visits every row once in a seeded random order;
//! the objective is evaluated at the end of each epoch and the best iterate
//! is the one kept.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::learners::PegasosParams;
use crate::seeds;
use crate::textproc::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pegasos {
    /// Feature weights followed by the bias weight.
    weights: Vec<f64>,
    /// Objective after each epoch, and the best seen so far.
    history: Vec<Checkpoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub epoch: usize,
    pub objective: f64,
    pub best_objective: f64,
}

/// Margin of `x` under dense `weights` (last entry is the bias).
pub fn margin(weights: &[f64], x: &FeatureVector) -> f64 {
    let dim = weights.len() - 1;
    x.dot_dense(&weights[..dim]) + weights[dim]
}

/// `lambda/2 * |w|^2 + mean(max(0, 1 - y * margin))`, with y in {-1, +1}.
pub fn objective(weights: &[f64], lambda: f64, xs: &[FeatureVector], ys: &[bool]) -> f64 {
    let norm2: f64 = weights.iter().map(|w| w * w).sum();
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let s = if y { 1.0 } else { -1.0 };
            (1.0 - s * margin(weights, x)).max(0.0)
        })
        .sum();
    0.5 * lambda * norm2 + hinge / xs.len() as f64
}

impl Pegasos {
    pub(crate) fn fit(
        params: &PegasosParams,
        xs: &[FeatureVector],
        ys: &[bool],
        seed: u64,
    ) -> Pegasos {
        let dim = xs[0].dim();
        let lambda = params.lambda;
        // w = scale * v; the scale absorbs the (1 - 1/t) shrink in O(1)
        let mut v = vec![0.0; dim + 1];
        let mut scale = 1.0;
        let mut best = v.clone();
        let mut best_obj = objective(&best, lambda, xs, ys);
        let mut history = Vec::with_capacity(params.epochs);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        let mut rng = seeds::rng(seed);
        let mut t = 0u64;
        for epoch in 1..=params.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                let eta = 1.0 / (lambda * t as f64);
                let y = if ys[i] { 1.0 } else { -1.0 };
                let m = scale * (xs[i].dot_dense(&v[..dim]) + v[dim]);
                let shrink = 1.0 - 1.0 / t as f64;
                if shrink == 0.0 {
                    v.iter_mut().for_each(|w| *w = 0.0);
                    scale = 1.0;
                } else {
                    scale *= shrink;
                }
                if y * m < 1.0 {
                    let step = eta * y / scale;
                    for (j, xv) in xs[i].iter() {
                        v[j as usize] += step * xv;
                    }
                    v[dim] += step;
                }
                if scale < 1e-100 {
                    v.iter_mut().for_each(|w| *w *= scale);
                    scale = 1.0;
                }
            }
            let w: Vec<f64> = v.iter().map(|x| x * scale).collect();
            let obj = objective(&w, lambda, xs, ys);
            if obj < best_obj {
                best_obj = obj;
                best = w;
            }
            history.push(Checkpoint {
                epoch,
                objective: obj,
                best_objective: best_obj,
            });
        }
        Pegasos {
            weights: best,
            history,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn history(&self) -> &[Checkpoint] {
        &self.history
    }

    pub fn margin(&self, x: &FeatureVector) -> f64 {
        margin(&self.weights, x)
    }

    /// Logistic squashing of the margin; 0.5 at the decision boundary.
    pub fn score(&self, x: &FeatureVector) -> f64 {
        1.0 / (1.0 + (-self.margin(x)).exp())
    }
}
