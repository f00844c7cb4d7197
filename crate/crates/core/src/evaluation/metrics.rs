use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// Counts `(predicted, actual)` pairs.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (bool, bool)>) -> Self {
        let mut c = ConfusionCounts::default();
        for (pred, truth) in pairs {
            match (pred, truth) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

impl std::ops::Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, o: ConfusionCounts) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub beta: f64,
    pub f_beta: f64,
    /// Missing when the evaluated set held a single class.
    pub auc: Option<f64>,
}

/// `(1 + b^2) P R / (b^2 P + R)`, zero when both are zero.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / den
    }
}

pub fn metrics_from_confusion(c: &ConfusionCounts, beta: f64) -> Result<Metrics> {
    if c.total() == 0 {
        return Err(Error::InvalidInput("no evaluated instances".into()));
    }
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::Config(format!("beta {beta} must be > 0")));
    }
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    Ok(Metrics {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        beta,
        f_beta: f_beta(precision, recall, beta),
        auc: None,
    })
}

/// Rank-statistic AUC: the chance a random positive outscores a random
/// negative, ties counting one half.
pub fn auc(scored: &[(f64, bool)]) -> Result<f64> {
    let n_pos = scored.iter().filter(|s| s.1).count();
    let n_neg = scored.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].0.total_cmp(&scored[b].0));
    // sum of positive midranks, doubled to stay in integers
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scored[order[j]].0 == scored[order[i]].0 {
            j += 1;
        }
        // ranks i+1 ..= j share the midrank (i + 1 + j) / 2
        let pos_in_block = order[i..j].iter().filter(|&&o| scored[o].1).count() as u128;
        rank_sum2 += pos_in_block * (i as u128 + 1 + j as u128);
        i = j;
    }
    let np = n_pos as u128;
    let u2 = rank_sum2 - np * (np + 1);
    Ok(u2 as f64 / (2 * np * n_neg as u128) as f64)
}

/// Expected metrics of guessing "need" with probability `p_guess` on data
/// with the given prevalence. `p_guess = 1` is the simple-assignment rule.
pub fn analytic_baseline(prevalence: f64, p_guess: f64) -> Result<Metrics> {
    if !(prevalence > 0.0 && prevalence < 1.0) {
        return Err(Error::InvalidInput(format!(
            "prevalence {prevalence} outside (0, 1)"
        )));
    }
    if !(p_guess > 0.0 && p_guess <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "guess rate {p_guess} outside (0, 1]"
        )));
    }
    Ok(Metrics {
        accuracy: p_guess * prevalence + (1.0 - p_guess) * (1.0 - prevalence),
        precision: prevalence,
        recall: p_guess,
        beta: 1.0,
        f_beta: 2.0 * prevalence * p_guess / (prevalence + p_guess),
        auc: Some(0.5),
    })
}

/// Relative gain in percent.
pub fn improvement(f1_model: f64, f1_baseline: f64) -> Result<f64> {
    if f1_baseline.is_nan() || f1_baseline <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "baseline F1 {f1_baseline} must be > 0"
        )));
    }
    Ok((f1_model / f1_baseline - 1.0) * 100.0)
}

/// Expected F1 of labeling everything positive: `2p / (1 + p)`.
pub fn simple_assignment_f1(prevalence: f64) -> f64 {
    2.0 * prevalence / (1.0 + prevalence)
}

/// Hours of rater time for `n_tweets` at `seconds_per_tweet` each.
pub fn labeling_cost(n_tweets: usize, seconds_per_tweet: f64) -> f64 {
    n_tweets as f64 * seconds_per_tweet / 3600.0
}
