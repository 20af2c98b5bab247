use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::{confusion, metrics, roc_auc, ConfusionMatrix, EvalError, MetricsReport, RocCurve};
use crate::catalog::FeatureSetId;
use crate::dataset::{Dataset, Label};
use crate::model::{AlgoDescriptor, Classifier};
use crate::par;
use crate::rng::{derive_seed, rng_from_seed};

/// Stratified test folds, each sorted ascending.
///
/// Each class is shuffled separately and dealt round-robin; the deal for the
/// malware class continues from the fold where the benign deal stopped, so
/// fold sizes also differ by at most one overall.
pub fn stratified_folds(
    labels: &[Label],
    k: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>, EvalError> {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    let max = by_class[0].len().min(by_class[1].len());
    if k < 2 || k > max {
        return Err(EvalError::FoldCount { k, max });
    }
    let mut rng = rng_from_seed(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in &mut by_class {
        class.shuffle(&mut rng);
        for &i in class.iter() {
            folds[next].push(i);
            next = (next + 1) % k;
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(folds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub algo: AlgoDescriptor,
    pub seed: u64,
    /// Test indices of each fold.
    pub folds: Vec<Vec<usize>>,
    pub fold_confusion: Vec<ConfusionMatrix>,
    pub pooled: ConfusionMatrix,
    pub metrics: MetricsReport,
    /// Held-out malware score of every instance, in dataset order.
    pub scores: Vec<f64>,
    pub roc: RocCurve,
}

impl CvResult {
    pub fn k(&self) -> usize {
        self.folds.len()
    }
}

/// `k`-fold stratified cross-validation with results pooled over folds.
///
/// Fold `i` trains `algo` with seed `derive_seed(seed, i)`; fold assignment
/// uses `seed` itself.
pub fn cross_validate(
    dataset: &Dataset,
    algo: &AlgoDescriptor,
    k: usize,
    seed: u64,
) -> Result<CvResult, EvalError> {
    let folds = stratified_folds(dataset.labels(), k, seed)?;
    let per_fold = par::map_indices(k, |fold| {
        let test = &folds[fold];
        let mut in_test = vec![false; dataset.len()];
        test.iter().for_each(|&i| in_test[i] = true);
        let train_rows: Vec<usize> = (0..dataset.len()).filter(|&i| !in_test[i]).collect();
        let model = algo
            .with_seed(derive_seed(seed, fold as u64))
            .train(&dataset.subset(&train_rows))
            .map_err(|source| EvalError::Fold { fold, source })?;
        let scores: Vec<f64> = test
            .iter()
            .map(|&i| model.malware_score(dataset.vector(i).bits()))
            .collect();
        Ok::<_, EvalError>(scores)
    });

    let mut scores = vec![f64::NAN; dataset.len()];
    let mut fold_confusion = Vec::with_capacity(k);
    for (test, fold_scores) in folds.iter().zip(per_fold) {
        let fold_scores = fold_scores?;
        let truth: Vec<Label> = test.iter().map(|&i| dataset.label(i)).collect();
        let predicted: Vec<Label> = fold_scores.iter().map(|&s| Label::from_score(s)).collect();
        fold_confusion.push(confusion(&truth, &predicted)?);
        for (&i, s) in test.iter().zip(fold_scores) {
            scores[i] = s;
        }
    }
    let pooled: ConfusionMatrix = fold_confusion.iter().copied().sum();
    let metrics = metrics(&pooled)?;
    let roc = roc_auc(&scores, dataset.labels())?;
    Ok(CvResult {
        algo: *algo,
        seed,
        folds,
        fold_confusion,
        pooled,
        metrics,
        scores,
        roc,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub algo: String,
    pub feature_set: FeatureSetId,
    pub features: usize,
    pub metrics: MetricsReport,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| format!("{v:.3}"))
}

impl ComparisonTable {
    pub const HEADER: &'static str =
        "algo,feature_set,features,TPR,TNR,FPR,FNR,ACC,ERR,precision,AUC";

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::HEADER);
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:.3},{:.3},{},{:.3}",
                r.algo,
                r.feature_set,
                r.features,
                cell(m.tpr),
                cell(m.tnr),
                cell(m.fpr),
                cell(m.fnr),
                m.acc,
                m.err,
                cell(m.precision),
                r.auc
            );
        }
        out
    }
}

impl ComparisonRow {
    pub fn from_cv(result: &CvResult, feature_set: FeatureSetId, features: usize) -> Self {
        Self {
            algo: result.algo.kind().to_string(),
            feature_set,
            features,
            metrics: result.metrics,
            auc: result.roc.auc,
        }
    }
}

/// Cross-validates every algorithm on every feature subset with the same
/// folds. Rows are ordered by feature set, then algorithm.
pub fn compare(
    dataset: &Dataset,
    algos: &[AlgoDescriptor],
    feature_sets: &[FeatureSetId],
    k: usize,
    seed: u64,
) -> Result<ComparisonTable, EvalError> {
    if algos.is_empty() || feature_sets.is_empty() {
        return Err(EvalError::NoAlgorithms);
    }
    let mut rows = Vec::new();
    for &set in feature_sets {
        let view = dataset.select_features(set);
        for algo in algos {
            let result = cross_validate(&view, algo, k, seed)?;
            rows.push(ComparisonRow::from_cv(&result, set, view.n_features()));
        }
    }
    Ok(ComparisonTable { rows })
}
