use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::evaluation::cv::{Doc, EvalOptions};
use crate::evaluation::grid::GridSpec;
use crate::evaluation::metrics::{analytic_baseline, improvement, ConfusionCounts, Metrics};
use crate::learners::{AlgorithmKind, AlgorithmParams};
use crate::textproc::PipelineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// Parameters used for this fold (the selected cell in nested CV).
    pub params: AlgorithmParams,
    /// Mean inner F-score per grid cell, canonical order; empty for plain CV.
    pub inner_scores: Vec<f64>,
    pub confusion: ConfusionCounts,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub stddev: f64,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Aggregate {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() < 2 {
            0.0
        } else {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        };
        Aggregate {
            mean,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            stddev: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRow {
    pub name: String,
    pub p_guess: f64,
    pub f1: f64,
    /// Gain of the mean model F-score over this baseline, in percent.
    pub improvement_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineBlock {
    pub prevalence: f64,
    pub rows: Vec<BaselineRow>,
}

impl BaselineBlock {
    pub const GUESS_RATES: [f64; 3] = [0.2, 0.5, 1.0];

    pub fn new(prevalence: f64, model_f1: f64) -> Option<BaselineBlock> {
        let rows = Self::GUESS_RATES
            .iter()
            .map(|&p| {
                let f1 = analytic_baseline(prevalence, p).ok()?.f_beta;
                Some(BaselineRow {
                    name: if p == 1.0 {
                        "simple assignment".into()
                    } else {
                        format!("random guess (p={p})")
                    },
                    p_guess: p,
                    f1,
                    improvement_pct: improvement(model_f1, f1).ok()?,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        Some(BaselineBlock { prevalence, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSnapshot {
    pub options: EvalOptions,
    pub grid: GridSpec,
    pub grid_size: usize,
    pub instances: usize,
    #[serde(default)]
    pub pipeline: Option<PipelineConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub algorithm: AlgorithmKind,
    pub folds: Vec<FoldResult>,
    /// Over the per-fold F-scores.
    pub aggregate: Aggregate,
    pub baseline: Option<BaselineBlock>,
    pub config: ConfigSnapshot,
}

impl EvaluationReport {
    pub(crate) fn new(
        algorithm: AlgorithmKind,
        folds: Vec<FoldResult>,
        docs: &[Doc],
        options: &EvalOptions,
        grid: GridSpec,
    ) -> EvaluationReport {
        let scores: Vec<f64> = folds.iter().map(|f| f.metrics.f_beta).collect();
        let aggregate = Aggregate::of(&scores);
        let prevalence = docs.iter().filter(|d| d.label).count() as f64 / docs.len() as f64;
        EvaluationReport {
            algorithm,
            folds,
            aggregate,
            baseline: BaselineBlock::new(prevalence, aggregate.mean),
            config: ConfigSnapshot {
                options: options.clone(),
                grid_size: grid.size(),
                grid,
                instances: docs.len(),
                pipeline: None,
            },
        }
    }

    pub fn with_pipeline(mut self, cfg: PipelineConfig) -> Self {
        self.config.pipeline = Some(cfg);
        self
    }

    pub fn f_scores(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.metrics.f_beta).collect()
    }

    /// Plain-text table: one row per fold, then the aggregate and baselines.
    pub fn to_table(&self) -> String {
        let beta = self.config.options.beta;
        let f_name = if beta == 1.0 {
            "F1".to_string()
        } else {
            format!("F{beta}")
        };
        let params: Vec<String> = self.folds.iter().map(|f| f.params.to_string()).collect();
        let w = params
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(0)
            .max("Parameters".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<5} {:<w$}  {:>8}  {:>6}  {:>9}  {:>6}  {:>6}",
            "Fold", "Parameters", "Accuracy", "AUC", "Precision", "Recall", f_name
        );
        for (f, p) in self.folds.iter().zip(&params) {
            let m = &f.metrics;
            let auc = m.auc.map_or("-".to_string(), |a| format!("{a:.3}"));
            let _ = writeln!(
                out,
                "{:<5} {:<w$}  {:>8.3}  {:>6}  {:>9.3}  {:>6.3}  {:>6.3}",
                f.fold + 1,
                p,
                m.accuracy,
                auc,
                m.precision,
                m.recall,
                m.f_beta
            );
        }
        let a = &self.aggregate;
        let _ = writeln!(
            out,
            "\n{f_name}: mean {:.3}  min {:.3}  max {:.3}  sd {:.3}",
            a.mean, a.min, a.max, a.stddev
        );
        if let Some(b) = &self.baseline {
            let _ = writeln!(
                out,
                "\nBaseline (prevalence {:.3})      F1  Improvement",
                b.prevalence
            );
            for r in &b.rows {
                let _ = writeln!(
                    out,
                    "{:<28}  {:>6.3}  {:>+10.2}%",
                    r.name, r.f1, r.improvement_pct
                );
            }
        }
        out
    }
}
