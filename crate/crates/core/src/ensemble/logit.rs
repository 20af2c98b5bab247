//! Simple logistic regression fitted by binary LogitBoost.
//!
//! The additive model is `F(v) = intercept + 0.5 * sum_m r_m(v)` with
//! `P(malware | v) = 1 / (1 + exp(-2 F(v)))`. Each base learner `r_m` looks at
//! one binary feature and outputs the weighted mean working response of the
//! training rows sharing that bit value, which is the exact weighted
//! least-squares fit. The number of boosting rounds is picked by
//! cross-validated held-out log-likelihood.

use crate::dataset::{Dataset, FeatureVector, Label};
use crate::error::{PredictError, TrainError};
use crate::eval::stratified_folds;
use crate::model::{Classifier, Prediction};
use crate::par;

/// Working responses are clamped to `[-Z_MAX, Z_MAX]`.
pub const Z_MAX: f64 = 3.0;
pub const WEIGHT_FLOOR: f64 = 1e-10;
pub const DEFAULT_CV_FOLDS: usize = 5;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

/// Newton step target and weight for one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkingResponse {
    pub z: f64,
    pub w: f64,
}

/// `z = (y - p) / (p (1 - p))` clamped to `±z_max`; `w = p (1 - p)` floored.
pub fn logitboost_response(y: Label, p: f64, z_max: f64) -> Result<WorkingResponse, TrainError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(TrainError::InvalidParameter(format!(
            "probability {p} outside (0, 1)"
        )));
    }
    Ok(response(y.is_malware(), p, z_max))
}

fn response(malware: bool, p: f64, z_max: f64) -> WorkingResponse {
    let y = if malware { 1.0 } else { 0.0 };
    let variance = p * (1.0 - p);
    let z = if variance > 0.0 {
        ((y - p) / variance).clamp(-z_max, z_max)
    } else if malware {
        z_max
    } else {
        -z_max
    };
    WorkingResponse {
        z,
        w: variance.max(WEIGHT_FLOOR),
    }
}

/// One-feature regressor: `if_absent` when the bit is 0, `if_present` when 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimpleRegressor {
    pub feature: usize,
    pub if_absent: f64,
    pub if_present: f64,
}

impl SimpleRegressor {
    pub fn eval(&self, bits: &[bool]) -> f64 {
        if bits[self.feature] {
            self.if_present
        } else {
            self.if_absent
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitModel {
    intercept: f64,
    regressors: Vec<SimpleRegressor>,
    max_iterations: usize,
    cv_folds: usize,
    n_features: usize,
}

impl LogitModel {
    /// The zero model: every score is exactly one half.
    pub fn empty(n_features: usize) -> Self {
        Self {
            intercept: 0.0,
            regressors: Vec::new(),
            max_iterations: 0,
            cv_folds: 0,
            n_features,
        }
    }

    pub fn from_parts(
        intercept: f64,
        regressors: Vec<SimpleRegressor>,
        max_iterations: usize,
        cv_folds: usize,
        n_features: usize,
    ) -> Result<Self, TrainError> {
        if regressors.len() > max_iterations {
            return Err(TrainError::InvalidParameter(format!(
                "{} regressors exceed max_iterations {max_iterations}",
                regressors.len()
            )));
        }
        if let Some(r) = regressors.iter().find(|r| r.feature >= n_features) {
            return Err(TrainError::InvalidParameter(format!(
                "regressor on feature {} but model has {n_features} features",
                r.feature
            )));
        }
        Ok(Self {
            intercept,
            regressors,
            max_iterations,
            cv_folds,
            n_features,
        })
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn regressors(&self) -> &[SimpleRegressor] {
        &self.regressors
    }

    pub fn iterations_used(&self) -> usize {
        self.regressors.len()
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    pub fn cv_folds(&self) -> usize {
        self.cv_folds
    }

    /// The additive score `F(v)`.
    pub fn additive_score(&self, bits: &[bool]) -> f64 {
        self.intercept + 0.5 * self.regressors.iter().map(|r| r.eval(bits)).sum::<f64>()
    }

    /// The model after its first `iterations` boosting rounds.
    pub fn truncated(&self, iterations: usize) -> LogitModel {
        let mut m = self.clone();
        m.regressors.truncate(iterations);
        m
    }
}

impl Classifier for LogitModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn malware_score(&self, bits: &[bool]) -> f64 {
        sigmoid2(self.additive_score(bits))
    }
}

pub fn predict_simple_logistic(
    model: &LogitModel,
    vector: &FeatureVector,
) -> Result<Prediction, PredictError> {
    model.predict(vector)
}

/// `1 / (1 + exp(-2f))`.
fn sigmoid2(f: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * f).exp())
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Log-likelihood contribution of one instance with additive score `f`.
fn instance_log_likelihood(malware: bool, f: f64) -> f64 {
    // ln p = -softplus(-2f), ln(1 - p) = -softplus(2f)
    if malware {
        -softplus(-2.0 * f)
    } else {
        -softplus(2.0 * f)
    }
}

/// Binomial log-likelihood `sum (1 - y) ln(1 - p) + y ln p` (natural log).
pub fn log_likelihood(model: &LogitModel, dataset: &Dataset) -> f64 {
    dataset
        .instances()
        .map(|(v, label)| {
            instance_log_likelihood(label.is_malware(), model.additive_score(v.bits()))
        })
        .sum()
}

/// Boosts up to `max_iterations` rounds, picks the round count with the best
/// mean held-out log-likelihood over `cv_folds` stratified folds (ties to
/// fewer rounds, zero allowed), then refits on all rows for that many rounds.
pub fn train_simple_logistic(
    dataset: &Dataset,
    max_iterations: usize,
    cv_folds: usize,
    seed: u64,
) -> Result<LogitModel, TrainError> {
    let (benign, malware) = dataset.class_counts();
    if benign == 0 || malware == 0 {
        return Err(TrainError::SingleClass { benign, malware });
    }
    if max_iterations == 0 {
        return Err(TrainError::InvalidParameter(
            "max_iterations must be at least 1".into(),
        ));
    }
    let folds = stratified_folds(dataset.labels(), cv_folds, seed)
        .map_err(|e| TrainError::InvalidParameter(format!("iteration-selection folds: {e}")))?;

    let sparse = SparseRows::new(dataset);
    let per_fold: Vec<Vec<f64>> = par::map_slice(&folds, |test| {
        let mut in_test = vec![false; dataset.len()];
        test.iter().for_each(|&i| in_test[i] = true);
        let train: Vec<usize> = (0..dataset.len()).filter(|&i| !in_test[i]).collect();
        held_out_curve(dataset, &sparse, &train, test, max_iterations)
    });

    let mut best_iterations = 0;
    let mut best_score = f64::NEG_INFINITY;
    for m in 0..=max_iterations {
        let total: f64 = per_fold.iter().map(|curve| curve[m]).sum();
        let mean = total / per_fold.len() as f64;
        if mean > best_score {
            best_score = mean;
            best_iterations = m;
        }
    }

    let all: Vec<usize> = (0..dataset.len()).collect();
    let regressors = Booster::new(dataset, &sparse, &all).run(best_iterations, |_| {});
    Ok(LogitModel {
        intercept: 0.0,
        regressors,
        max_iterations,
        cv_folds,
        n_features: dataset.n_features(),
    })
}

/// Held-out log-likelihood after 0, 1, ..., `iterations` rounds trained on `train`.
fn held_out_curve(
    dataset: &Dataset,
    sparse: &SparseRows,
    train: &[usize],
    test: &[usize],
    iterations: usize,
) -> Vec<f64> {
    let mut scores = vec![0.0; test.len()];
    let evaluate = |scores: &[f64]| -> f64 {
        test.iter()
            .zip(scores)
            .map(|(&i, &f)| instance_log_likelihood(dataset.label(i).is_malware(), f))
            .sum()
    };
    let mut curve = Vec::with_capacity(iterations + 1);
    curve.push(evaluate(&scores));
    Booster::new(dataset, sparse, train).run(iterations, |r| {
        for (f, &i) in scores.iter_mut().zip(test) {
            *f += 0.5 * r.eval(dataset.vector(i).bits());
        }
        curve.push(evaluate(&scores));
    });
    curve
}

/// Indices of set bits per row.
struct SparseRows {
    ones: Vec<Vec<u32>>,
}

impl SparseRows {
    fn new(dataset: &Dataset) -> Self {
        let ones = dataset
            .vectors()
            .iter()
            .map(|v| {
                v.bits()
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b)
                    .map(|(j, _)| j as u32)
                    .collect()
            })
            .collect();
        Self { ones }
    }
}

struct Booster<'a> {
    dataset: &'a Dataset,
    sparse: &'a SparseRows,
    rows: &'a [usize],
    scores: Vec<f64>,
}

impl<'a> Booster<'a> {
    fn new(dataset: &'a Dataset, sparse: &'a SparseRows, rows: &'a [usize]) -> Self {
        Self {
            dataset,
            sparse,
            rows,
            scores: vec![0.0; rows.len()],
        }
    }

    fn run(
        mut self,
        iterations: usize,
        mut after_round: impl FnMut(&SimpleRegressor),
    ) -> Vec<SimpleRegressor> {
        let mut fitted = Vec::with_capacity(iterations);
        for _ in 0..iterations {
            let r = self.round();
            after_round(&r);
            fitted.push(r);
        }
        fitted
    }

    fn round(&mut self) -> SimpleRegressor {
        let f = self.dataset.n_features();
        let mut w_one = vec![0.0; f];
        let mut wz_one = vec![0.0; f];
        let mut n_one = vec![0usize; f];
        let (mut w_all, mut wz_all) = (0.0, 0.0);

        let responses: Vec<WorkingResponse> = self
            .rows
            .iter()
            .zip(&self.scores)
            .map(|(&i, &score)| {
                response(self.dataset.label(i).is_malware(), sigmoid2(score), Z_MAX)
            })
            .collect();
        for (&i, r) in self.rows.iter().zip(&responses) {
            let wz = r.w * r.z;
            w_all += r.w;
            wz_all += wz;
            for &j in &self.sparse.ones[i] {
                let j = j as usize;
                w_one[j] += r.w;
                wz_one[j] += wz;
                n_one[j] += 1;
            }
        }

        // Weighted SSE of a two-cell fit is sum(w z^2) minus the explained
        // term S0^2/W0 + S1^2/W1; maximise the explained term.
        let overall = wz_all / w_all;
        let n = self.rows.len();
        let mut best: Option<(f64, SimpleRegressor)> = None;
        for j in 0..f {
            let (w1, s1, c1) = (w_one[j], wz_one[j], n_one[j]);
            let (w0, s0, c0) = (w_all - w1, wz_all - s1, n - c1);
            let mean1 = if c1 > 0 { s1 / w1 } else { overall };
            let mean0 = if c0 > 0 { s0 / w0 } else { overall };
            let explained =
                if c1 > 0 { s1 * s1 / w1 } else { 0.0 } + if c0 > 0 { s0 * s0 / w0 } else { 0.0 };
            if best.as_ref().is_none_or(|(e, _)| explained > *e) {
                best = Some((
                    explained,
                    SimpleRegressor {
                        feature: j,
                        if_absent: mean0,
                        if_present: mean1,
                    },
                ));
            }
        }
        let (_, r) = best.expect("at least one feature");
        for (score, &i) in self.scores.iter_mut().zip(self.rows) {
            *score += 0.5 * r.eval(self.dataset.vector(i).bits());
        }
        r
    }
}
