use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{stratified_folds, Corpus};
use crate::error::{Error, Result};
use crate::evaluation::grid::GridSpec;
use crate::evaluation::metrics::{auc, metrics_from_confusion, ConfusionCounts, Metrics};
use crate::evaluation::report::{EvaluationReport, FoldResult};
use crate::learners::{train, AlgorithmSpec};
use crate::sampling::{apply_sampling, Origin, SamplingSpec, Strategy};
use crate::seeds::{self, tag};
use crate::textproc::{build_vocabulary, vectorize, FeatureVector, Pipeline, TokenSequence};

/// A labeled document after preprocessing. Tokenizing is per document, so
/// it is done once up front; vocabularies are still fitted per fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Doc {
    pub id: String,
    pub tokens: TokenSequence,
    pub label: bool,
}

/// Runs the Need/NoNeed tweets of a labeled corpus through `pipeline`.
pub fn tokenize_corpus(corpus: &Corpus, pipeline: &Pipeline) -> Result<Vec<Doc>> {
    let labeled = corpus.labeled();
    if labeled.is_empty() {
        return Err(Error::InvalidInput(
            "corpus has no Need/NoNeed labels".into(),
        ));
    }
    Ok(labeled
        .par_iter()
        .map(|(t, y)| Doc {
            id: t.id.clone(),
            tokens: pipeline.tokens(&t.text),
            label: *y,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalOptions {
    pub outer_k: usize,
    pub inner_k: usize,
    pub seed: u64,
    pub sampling: Option<SamplingSpec>,
    pub beta: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            outer_k: 5,
            inner_k: 5,
            seed: 42,
            sampling: None,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Vocabulary,
    Sampling,
    Training,
    Testing,
}

/// Where in a (nested) cross-validation a piece of work happened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FoldContext {
    pub outer: Option<usize>,
    pub inner: Option<usize>,
    pub cell: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineageEvent {
    pub context: FoldContext,
    pub stage: Stage,
    /// Ids of every document that fed this stage.
    pub ids: Vec<String>,
}

/// Records which documents touched each stage of each fold.
#[derive(Debug, Default)]
pub struct Lineage {
    events: Mutex<Vec<LineageEvent>>,
}

impl Lineage {
    pub fn new() -> Self {
        Lineage::default()
    }

    fn record(&self, context: FoldContext, stage: Stage, ids: Vec<String>) {
        self.events
            .lock()
            .expect("lineage lock")
            .push(LineageEvent {
                context,
                stage,
                ids,
            });
    }

    /// All events, in a scheduling-independent order.
    pub fn events(&self) -> Vec<LineageEvent> {
        let mut ev = self.events.lock().expect("lineage lock").clone();
        ev.sort_by_key(|e| {
            (
                e.context.outer,
                e.context.cell,
                e.context.inner,
                e.stage as u8,
            )
        });
        ev
    }
}

/// Outcome of training on one index set and testing on another.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub confusion: ConfusionCounts,
    pub metrics: Metrics,
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_fold(
    spec: &AlgorithmSpec,
    docs: &[Doc],
    train_idx: &[usize],
    test_idx: &[usize],
    sampling: Option<SamplingSpec>,
    beta: f64,
    ctx: FoldContext,
    lineage: Option<&Lineage>,
) -> Result<FoldOutcome> {
    let ids = |idx: &[usize]| idx.iter().map(|&i| docs[i].id.clone()).collect::<Vec<_>>();
    let vocab = build_vocabulary(train_idx.iter().map(|&i| &docs[i].tokens), "training fold")?;
    if let Some(l) = lineage {
        l.record(ctx, Stage::Vocabulary, ids(train_idx));
    }
    let xs: Vec<FeatureVector> = train_idx
        .iter()
        .map(|&i| vectorize(&docs[i].tokens, &vocab))
        .collect();
    let ys: Vec<bool> = train_idx.iter().map(|&i| docs[i].label).collect();
    let model = match sampling.filter(|s| s.strategy != Strategy::None) {
        Some(s) => {
            let r = apply_sampling(&xs, &ys, &s)?;
            if let Some(l) = lineage {
                l.record(ctx, Stage::Sampling, ids(train_idx));
                let used: Vec<usize> = r
                    .origins
                    .iter()
                    .flat_map(|o| match *o {
                        Origin::Original(i) => vec![train_idx[i]],
                        Origin::Synthetic { base, neighbor, .. } => {
                            vec![train_idx[base], train_idx[neighbor]]
                        }
                    })
                    .collect();
                l.record(ctx, Stage::Training, ids(&used));
            }
            train(spec, &r.xs, &r.ys)?
        }
        None => {
            if let Some(l) = lineage {
                l.record(ctx, Stage::Training, ids(train_idx));
            }
            train(spec, &xs, &ys)?
        }
    };
    if let Some(l) = lineage {
        l.record(ctx, Stage::Testing, ids(test_idx));
    }
    let mut scored = Vec::with_capacity(test_idx.len());
    for &i in test_idx {
        scored.push((
            model.score(&vectorize(&docs[i].tokens, &vocab))?,
            docs[i].label,
        ));
    }
    let confusion = ConfusionCounts::from_pairs(scored.iter().map(|&(s, y)| (s > 0.5, y)));
    let mut metrics = metrics_from_confusion(&confusion, beta)?;
    metrics.auc = auc(&scored).ok();
    Ok(FoldOutcome { confusion, metrics })
}

fn sampling_for(opts: &EvalOptions, parts: &[u64]) -> Option<SamplingSpec> {
    opts.sampling
        .map(|s| s.with_seed(seeds::derive(opts.seed, parts)))
}

/// Stratified k-fold CV over `subset` (indices into `docs`). Returns one
/// outcome per fold, in fold order.
#[allow(clippy::too_many_arguments)]
pub(crate) fn cv_on_subset(
    spec: &AlgorithmSpec,
    docs: &[Doc],
    subset: &[usize],
    k: usize,
    folds_seed: u64,
    sampling: impl Fn(usize) -> Option<SamplingSpec> + Sync,
    beta: f64,
    ctx: impl Fn(usize) -> FoldContext + Sync,
    lineage: Option<&Lineage>,
) -> Result<Vec<FoldOutcome>> {
    let labels: Vec<bool> = subset.iter().map(|&i| docs[i].label).collect();
    let folds = stratified_folds(&labels, k, folds_seed)?;
    let split = |f: usize| -> (Vec<usize>, Vec<usize>) {
        let mut in_test = vec![false; subset.len()];
        for &p in &folds[f] {
            in_test[p] = true;
        }
        let train = (0..subset.len())
            .filter(|&p| !in_test[p])
            .map(|p| subset[p])
            .collect();
        let test = folds[f].iter().map(|&p| subset[p]).collect();
        (train, test)
    };
    (0..k)
        .into_par_iter()
        .map(|f| {
            let (train_idx, test_idx) = split(f);
            run_fold(
                spec,
                docs,
                &train_idx,
                &test_idx,
                sampling(f),
                beta,
                ctx(f),
                lineage,
            )
        })
        .collect()
}

/// Plain stratified k-fold CV with `opts.outer_k` folds. Rebalancing, when
/// configured, is applied to each training portion only.
pub fn cross_validate(
    spec: &AlgorithmSpec,
    docs: &[Doc],
    opts: &EvalOptions,
) -> Result<EvaluationReport> {
    let all: Vec<usize> = (0..docs.len()).collect();
    let outcomes = cv_on_subset(
        spec,
        docs,
        &all,
        opts.outer_k,
        seeds::derive(opts.seed, &[tag::OUTER_FOLDS]),
        |f| sampling_for(opts, &[tag::SAMPLING, f as u64]),
        opts.beta,
        |f| FoldContext {
            outer: Some(f),
            ..Default::default()
        },
        None,
    )?;
    let folds = outcomes
        .into_iter()
        .enumerate()
        .map(|(f, o)| FoldResult {
            fold: f,
            params: spec.params,
            inner_scores: Vec::new(),
            confusion: o.confusion,
            metrics: o.metrics,
        })
        .collect();
    Ok(EvaluationReport::new(
        spec.params.kind(),
        folds,
        docs,
        opts,
        GridSpec::single(spec.params),
    ))
}

/// Nested CV: per outer fold, every grid cell is scored by inner CV on the
/// outer-training portion; the best mean inner F-score (first cell on
/// ties) is retrained on that portion and tested on the outer fold.
pub fn nested_cv(grid: &GridSpec, docs: &[Doc], opts: &EvalOptions) -> Result<EvaluationReport> {
    nested_cv_traced(grid, docs, opts, None)
}

pub fn nested_cv_traced(
    grid: &GridSpec,
    docs: &[Doc],
    opts: &EvalOptions,
    lineage: Option<&Lineage>,
) -> Result<EvaluationReport> {
    if opts.outer_k < 2 || opts.inner_k < 2 {
        return Err(Error::Config(
            "nested CV needs outer_k and inner_k >= 2".into(),
        ));
    }
    let cells = grid.cells()?;
    let labels: Vec<bool> = docs.iter().map(|d| d.label).collect();
    let outer = stratified_folds(
        &labels,
        opts.outer_k,
        seeds::derive(opts.seed, &[tag::OUTER_FOLDS]),
    )?;
    let folds: Vec<FoldResult> = (0..opts.outer_k)
        .into_par_iter()
        .map(|o| -> Result<FoldResult> {
            let mut in_test = vec![false; docs.len()];
            for &i in &outer[o] {
                in_test[i] = true;
            }
            let outer_train: Vec<usize> = (0..docs.len()).filter(|&i| !in_test[i]).collect();
            let inner_seed = seeds::derive(opts.seed, &[tag::INNER_FOLDS, o as u64]);
            let inner_scores: Vec<f64> = cells
                .par_iter()
                .enumerate()
                .map(|(c, params)| -> Result<f64> {
                    let spec = AlgorithmSpec::new(*params, opts.seed);
                    let res = cv_on_subset(
                        &spec,
                        docs,
                        &outer_train,
                        opts.inner_k,
                        inner_seed,
                        |i| sampling_for(opts, &[tag::SAMPLING, o as u64, i as u64]),
                        opts.beta,
                        |i| FoldContext {
                            outer: Some(o),
                            inner: Some(i),
                            cell: Some(c),
                        },
                        lineage,
                    )?;
                    Ok(res.iter().map(|r| r.metrics.f_beta).sum::<f64>() / res.len() as f64)
                })
                .collect::<Result<_>>()?;
            let mut best = 0;
            for (c, &s) in inner_scores.iter().enumerate() {
                if s > inner_scores[best] {
                    best = c;
                }
            }
            let spec = AlgorithmSpec::new(cells[best], opts.seed);
            let out = run_fold(
                &spec,
                docs,
                &outer_train,
                &outer[o],
                sampling_for(opts, &[tag::SAMPLING, o as u64]),
                opts.beta,
                FoldContext {
                    outer: Some(o),
                    ..Default::default()
                },
                lineage,
            )?;
            Ok(FoldResult {
                fold: o,
                params: cells[best],
                inner_scores,
                confusion: out.confusion,
                metrics: out.metrics,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EvaluationReport::new(
        cells[0].kind(),
        folds,
        docs,
        opts,
        grid.clone(),
    ))
}

/// Trains on all of `train` and tests on all of `test`.
pub fn train_test(
    spec: &AlgorithmSpec,
    train: &[Doc],
    test: &[Doc],
    sampling: Option<SamplingSpec>,
    beta: f64,
) -> Result<FoldOutcome> {
    let docs: Vec<Doc> = train.iter().chain(test).cloned().collect();
    let train_idx: Vec<usize> = (0..train.len()).collect();
    let test_idx: Vec<usize> = (train.len()..docs.len()).collect();
    run_fold(
        spec,
        &docs,
        &train_idx,
        &test_idx,
        sampling,
        beta,
        FoldContext::default(),
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{AlgorithmParams, NaiveBayesParams, PegasosParams};

    pub(crate) fn separable(n: usize, noise: f64, seed: u64) -> Vec<Doc> {
        use rand::Rng;
        let mut rng = seeds::rng(seed);
        (0..n)
            .map(|i| {
                let y = i % 3 == 0;
                let vocab = if y { "need" } else { "chat" };
                let len = rng.gen_range(3..7);
                let tokens = (0..len)
                    .map(|_| format!("{vocab}{}", rng.gen_range(0..20)))
                    .collect();
                let flip = rng.gen_bool(noise);
                Doc {
                    id: format!("d{i}"),
                    tokens: TokenSequence(tokens),
                    label: y ^ flip,
                }
            })
            .collect()
    }

    fn nb() -> AlgorithmSpec {
        AlgorithmSpec::new(AlgorithmParams::NaiveBayes(NaiveBayesParams::default()), 1)
    }

    #[test]
    fn separable_corpus_scores_high() {
        let docs = separable(150, 0.0, 3);
        let r = cross_validate(&nb(), &docs, &EvalOptions::default()).unwrap();
        assert!(r.aggregate.mean >= 0.95, "{:?}", r.aggregate);
        assert_eq!(r.folds.len(), 5);
    }

    #[test]
    fn two_fold_on_four_docs_is_reproducible() {
        let docs = vec![
            Doc {
                id: "a".into(),
                tokens: TokenSequence(vec!["x".into()]),
                label: true,
            },
            Doc {
                id: "b".into(),
                tokens: TokenSequence(vec!["x".into()]),
                label: true,
            },
            Doc {
                id: "c".into(),
                tokens: TokenSequence(vec!["y".into()]),
                label: false,
            },
            Doc {
                id: "d".into(),
                tokens: TokenSequence(vec!["y".into()]),
                label: false,
            },
        ];
        let opts = EvalOptions {
            outer_k: 2,
            ..Default::default()
        };
        let a = cross_validate(&nb(), &docs, &opts).unwrap();
        let b = cross_validate(&nb(), &docs, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_cell_nested_equals_plain_cv() {
        let docs = separable(90, 0.1, 5);
        let spec = AlgorithmSpec::new(AlgorithmParams::PegasosSvm(PegasosParams::default()), 42);
        let opts = EvalOptions {
            outer_k: 3,
            inner_k: 3,
            sampling: Some(SamplingSpec::new(Strategy::Oversample, 0)),
            ..Default::default()
        };
        let plain = cross_validate(&spec, &docs, &opts).unwrap();
        let nested = nested_cv(&GridSpec::single(spec.params), &docs, &opts).unwrap();
        for (p, n) in plain.folds.iter().zip(&nested.folds) {
            assert_eq!(p.metrics, n.metrics);
            assert_eq!(p.confusion, n.confusion);
        }
    }

    #[test]
    fn nested_cv_never_lets_test_docs_leak() {
        let docs = separable(60, 0.1, 9);
        let lineage = Lineage::new();
        let opts = EvalOptions {
            outer_k: 3,
            inner_k: 2,
            sampling: Some(SamplingSpec::new(Strategy::Smote, 0)),
            ..Default::default()
        };
        let grid = GridSpec::NaiveBayes {
            alpha: vec![0.5, 1.0],
        };
        nested_cv_traced(&grid, &docs, &opts, Some(&lineage)).unwrap();
        let events = lineage.events();
        for o in 0..3 {
            let test: std::collections::HashSet<&str> = events
                .iter()
                .find(|e| {
                    e.context.outer == Some(o)
                        && e.context.inner.is_none()
                        && e.stage == Stage::Testing
                })
                .unwrap()
                .ids
                .iter()
                .map(String::as_str)
                .collect();
            assert_eq!(test.len(), 20);
            for e in events
                .iter()
                .filter(|e| e.context.outer == Some(o) && e.stage != Stage::Testing)
            {
                assert!(
                    e.ids.iter().all(|id| !test.contains(id.as_str())),
                    "{:?} leaked",
                    e.stage
                );
            }
            // inner test folds also stay within the outer-training portion
            for e in events
                .iter()
                .filter(|e| e.context.outer == Some(o) && e.context.inner.is_some())
            {
                assert!(e.ids.iter().all(|id| !test.contains(id.as_str())));
            }
        }
        assert!(events.iter().any(|e| e.stage == Stage::Sampling));
    }

    #[test]
    fn nested_requires_two_folds() {
        let docs = separable(30, 0.0, 1);
        let opts = EvalOptions {
            inner_k: 1,
            ..Default::default()
        };
        assert!(nested_cv(&GridSpec::NaiveBayes { alpha: vec![1.0] }, &docs, &opts).is_err());
    }
}
