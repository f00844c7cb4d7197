//! Metrics, cross-validation, nested CV with grid search, analytic
//! baselines, learning curves and cross-domain matrices.
//!
//! All fold work runs on rayon; results are collected in fold and grid order,
//! so reports do not depend on scheduling.

mod curve;
mod cv;
mod grid;
mod metrics;
mod report;

pub use curve::{
    combined_baseline_improvement, cross_domain, learning_curve, plateau_index, CrossDomainReport,
    CurvePoint, LearningCurve, PLATEAU_GAIN,
};
pub use cv::{
    cross_validate, nested_cv, nested_cv_traced, tokenize_corpus, train_test, Doc, EvalOptions,
    FoldContext, FoldOutcome, Lineage, LineageEvent, Stage,
};
pub use grid::GridSpec;
pub use metrics::{
    analytic_baseline, auc, f_beta, improvement, labeling_cost, metrics_from_confusion,
    simple_assignment_f1, ConfusionCounts, Metrics,
};
pub use report::{
    Aggregate, BaselineBlock, BaselineRow, ConfigSnapshot, EvaluationReport, FoldResult,
};
