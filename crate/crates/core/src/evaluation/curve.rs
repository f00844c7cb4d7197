use serde::{Deserialize, Serialize};

use crate::corpus::stratified_subsample;
use crate::error::{Error, Result};
use crate::evaluation::cv::{
    cross_validate, cv_on_subset, train_test, Doc, EvalOptions, FoldContext,
};
use crate::evaluation::metrics::{improvement, simple_assignment_f1};
use crate::learners::AlgorithmSpec;
use crate::seeds::{self, tag};

/// Marginal F-score gain below which more labels stop paying off.
pub const PLATEAU_GAIN: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub size: usize,
    pub mean_f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub points: Vec<CurvePoint>,
    /// First size whose successor gains less than [`PLATEAU_GAIN`].
    pub plateau: Option<usize>,
}

impl LearningCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,mean_f1,plateau\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{}\n",
                p.size,
                p.mean_f1,
                self.plateau == Some(p.size)
            ));
        }
        out
    }
}

/// Index of the first point whose next point improves by less than
/// `min_gain`.
pub fn plateau_index(scores: &[f64], min_gain: f64) -> Option<usize> {
    scores.windows(2).position(|w| w[1] - w[0] < min_gain)
}

/// Mean k-fold F-score on stratified subsamples of increasing size.
pub fn learning_curve(
    spec: &AlgorithmSpec,
    docs: &[Doc],
    sizes: &[usize],
    opts: &EvalOptions,
) -> Result<LearningCurve> {
    if sizes.is_empty() {
        return Err(Error::InvalidInput("no curve sizes given".into()));
    }
    if let Some(w) = sizes.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "sizes must increase ({} then {})",
            w[0], w[1]
        )));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s > docs.len()) {
        return Err(Error::InvalidInput(format!(
            "size {s} exceeds corpus of {}",
            docs.len()
        )));
    }
    let labels: Vec<bool> = docs.iter().map(|d| d.label).collect();
    let mut points = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let subset = stratified_subsample(&labels, size, seeds::derive(opts.seed, &[size as u64]));
        let res = cv_on_subset(
            spec,
            docs,
            &subset,
            opts.outer_k,
            seeds::derive(opts.seed, &[tag::OUTER_FOLDS]),
            |f| {
                opts.sampling
                    .map(|s| s.with_seed(seeds::derive(opts.seed, &[tag::SAMPLING, f as u64])))
            },
            opts.beta,
            |f| FoldContext {
                outer: Some(f),
                ..Default::default()
            },
            None,
        )?;
        let mean_f1 = res.iter().map(|r| r.metrics.f_beta).sum::<f64>() / res.len() as f64;
        points.push(CurvePoint { size, mean_f1 });
    }
    let scores: Vec<f64> = points.iter().map(|p| p.mean_f1).collect();
    let plateau = plateau_index(&scores, PLATEAU_GAIN).map(|i| points[i].size);
    Ok(LearningCurve { points, plateau })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDomainReport {
    pub size_a: usize,
    pub size_b: usize,
    pub prevalence_a: f64,
    pub prevalence_b: f64,
    /// Mean k-fold F-score within each domain.
    pub intra_a: f64,
    pub intra_b: f64,
    /// Train on all of one domain, test on all of the other.
    pub a_to_b: f64,
    pub b_to_a: f64,
    /// Mean k-fold F-score on the union of both domains.
    pub combined: f64,
    pub cross_max: f64,
    /// Mean of the two per-domain simple-assignment baselines.
    pub combined_baseline: f64,
    pub cross_improvement_pct: f64,
}

/// Gain in percent of `cross_f1` over the mean of the two domains'
/// simple-assignment baselines.
pub fn combined_baseline_improvement(
    cross_f1: f64,
    prevalence_a: f64,
    prevalence_b: f64,
) -> Result<f64> {
    let base = (simple_assignment_f1(prevalence_a) + simple_assignment_f1(prevalence_b)) / 2.0;
    improvement(cross_f1, base)
}

fn prevalence(docs: &[Doc]) -> f64 {
    docs.iter().filter(|d| d.label).count() as f64 / docs.len() as f64
}

/// Intra-, cross- and combined-domain F-scores. With `size_match` the larger
/// domain is first reduced by stratified subsampling to the smaller's size.
pub fn cross_domain(
    a: &[Doc],
    b: &[Doc],
    spec: &AlgorithmSpec,
    opts: &EvalOptions,
    size_match: bool,
) -> Result<CrossDomainReport> {
    let reduce = |big: &[Doc], n: usize| -> Vec<Doc> {
        let labels: Vec<bool> = big.iter().map(|d| d.label).collect();
        stratified_subsample(&labels, n, seeds::derive(opts.seed, &[tag::SUBSAMPLE]))
            .into_iter()
            .map(|i| big[i].clone())
            .collect()
    };
    let (a, b): (Vec<Doc>, Vec<Doc>) = match (size_match, a.len().cmp(&b.len())) {
        (true, std::cmp::Ordering::Greater) => (reduce(a, b.len()), b.to_vec()),
        (true, std::cmp::Ordering::Less) => (a.to_vec(), reduce(b, a.len())),
        _ => (a.to_vec(), b.to_vec()),
    };
    let intra_a = cross_validate(spec, &a, opts)?.aggregate.mean;
    let intra_b = cross_validate(spec, &b, opts)?.aggregate.mean;
    let sampling = opts
        .sampling
        .map(|s| s.with_seed(seeds::derive(opts.seed, &[tag::SAMPLING])));
    let a_to_b = train_test(spec, &a, &b, sampling, opts.beta)?
        .metrics
        .f_beta;
    let b_to_a = train_test(spec, &b, &a, sampling, opts.beta)?
        .metrics
        .f_beta;
    let both: Vec<Doc> = a.iter().chain(&b).cloned().collect();
    let combined = cross_validate(spec, &both, opts)?.aggregate.mean;
    let (pa, pb) = (prevalence(&a), prevalence(&b));
    let cross_max = a_to_b.max(b_to_a);
    let combined_baseline = (simple_assignment_f1(pa) + simple_assignment_f1(pb)) / 2.0;
    Ok(CrossDomainReport {
        size_a: a.len(),
        size_b: b.len(),
        prevalence_a: pa,
        prevalence_b: pb,
        intra_a,
        intra_b,
        a_to_b,
        b_to_a,
        combined,
        cross_max,
        combined_baseline,
        cross_improvement_pct: improvement(cross_max, combined_baseline)?,
    })
}
