//! Confusion-matrix metrics, ROC analysis, stratified cross-validation and
//! multi-algorithm comparison reports.

mod cv;
mod metrics;
mod roc;

pub use cv::{compare, cross_validate, stratified_folds, ComparisonRow, ComparisonTable, CvResult};
pub use metrics::{confusion, metrics, ConfusionMatrix, MetricsReport};
pub use roc::{mann_whitney_auc, roc_auc, RocCurve, RocPoint};

use crate::error::TrainError;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("label lists differ in length ({truth} truth vs {other})")]
    LengthMismatch { truth: usize, other: usize },
    #[error("nothing to evaluate: empty input")]
    Empty,
    #[error("ROC needs both classes present (benign {benign}, malware {malware})")]
    SingleClass { benign: usize, malware: usize },
    #[error("score at position {0} is NaN")]
    NanScore(usize),
    #[error("fold count {k} outside 2..={max}")]
    FoldCount { k: usize, max: usize },
    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: TrainError,
    },
    #[error("no algorithms to compare")]
    NoAlgorithms,
}
