//! Common prediction interface and the algorithm roster.

use std::fmt;

use crate::bayes::{train_nb, NbModel, DEFAULT_ALPHA};
use crate::dataset::{Dataset, FeatureVector, Label};
use crate::ensemble::{
    train_forest, train_simple_logistic, ForestModel, ForestParams, LogitModel, DEFAULT_CV_FOLDS,
    DEFAULT_MAX_ITERATIONS, DEFAULT_TREES,
};
use crate::error::{PredictError, TrainError};
use crate::par;
use crate::trees::{train_decision_tree_seeded, train_random_tree, SplitCriterion, TreeModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: Label,
    /// Malware score in [0, 1].
    pub score: f64,
}

pub trait Classifier {
    fn n_features(&self) -> usize;

    /// Malware score for a vector already known to have the right length.
    fn malware_score(&self, bits: &[bool]) -> f64;

    fn predict(&self, vector: &FeatureVector) -> Result<Prediction, PredictError> {
        if vector.len() != self.n_features() {
            return Err(PredictError::LengthMismatch {
                expected: self.n_features(),
                found: vector.len(),
            });
        }
        let score = self.malware_score(vector.bits());
        Ok(Prediction {
            label: Label::from_score(score),
            score,
        })
    }
}

/// Default number of random features per split: `floor(log2 F) + 1`.
pub fn default_features_per_split(n_features: usize) -> usize {
    if n_features == 0 {
        return 0;
    }
    n_features.ilog2() as usize + 1
}

/// Which learner to run and with what settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlgoDescriptor {
    NaiveBayes {
        alpha: f64,
    },
    DecisionTree {
        criterion: SplitCriterion,
        prune: bool,
        seed: u64,
    },
    RandomTree {
        /// `None` resolves to [`default_features_per_split`] of the training set.
        features_per_split: Option<usize>,
        seed: u64,
    },
    RandomForest {
        trees: usize,
        features_per_split: Option<usize>,
        /// Bootstrap sample size as a fraction of N; `None` disables bootstrapping.
        bootstrap_fraction: Option<f64>,
        seed: u64,
    },
    SimpleLogistic {
        max_iterations: usize,
        cv_folds: usize,
        seed: u64,
    },
}

impl AlgoDescriptor {
    pub const KINDS: [&'static str; 5] = ["nb", "dt", "rt", "rf", "sl"];

    /// Default settings for a kind tag (`nb`, `dt`, `rt`, `rf`, `sl`).
    pub fn default_for(kind: &str, seed: u64) -> Option<Self> {
        Some(match kind {
            "nb" => AlgoDescriptor::NaiveBayes {
                alpha: DEFAULT_ALPHA,
            },
            "dt" => AlgoDescriptor::DecisionTree {
                criterion: SplitCriterion::Entropy,
                prune: true,
                seed,
            },
            "rt" => AlgoDescriptor::RandomTree {
                features_per_split: None,
                seed,
            },
            "rf" => AlgoDescriptor::RandomForest {
                trees: DEFAULT_TREES,
                features_per_split: None,
                bootstrap_fraction: Some(1.0),
                seed,
            },
            "sl" => AlgoDescriptor::SimpleLogistic {
                max_iterations: DEFAULT_MAX_ITERATIONS,
                cv_folds: DEFAULT_CV_FOLDS,
                seed,
            },
            _ => return None,
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AlgoDescriptor::NaiveBayes { .. } => "nb",
            AlgoDescriptor::DecisionTree { .. } => "dt",
            AlgoDescriptor::RandomTree { .. } => "rt",
            AlgoDescriptor::RandomForest { .. } => "rf",
            AlgoDescriptor::SimpleLogistic { .. } => "sl",
        }
    }

    /// Same algorithm with its seed replaced.
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        match &mut self {
            AlgoDescriptor::NaiveBayes { .. } => {}
            AlgoDescriptor::DecisionTree { seed, .. }
            | AlgoDescriptor::RandomTree { seed, .. }
            | AlgoDescriptor::RandomForest { seed, .. }
            | AlgoDescriptor::SimpleLogistic { seed, .. } => *seed = new_seed,
        }
        self
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            AlgoDescriptor::NaiveBayes { .. } => None,
            AlgoDescriptor::DecisionTree { seed, .. }
            | AlgoDescriptor::RandomTree { seed, .. }
            | AlgoDescriptor::RandomForest { seed, .. }
            | AlgoDescriptor::SimpleLogistic { seed, .. } => Some(*seed),
        }
    }

    pub fn train(&self, dataset: &Dataset) -> Result<Model, TrainError> {
        let f = dataset.n_features();
        Ok(match *self {
            AlgoDescriptor::NaiveBayes { alpha } => Model::NaiveBayes(train_nb(dataset, alpha)?),
            AlgoDescriptor::DecisionTree {
                criterion,
                prune,
                seed,
            } => Model::DecisionTree(train_decision_tree_seeded(dataset, criterion, prune, seed)?),
            AlgoDescriptor::RandomTree {
                features_per_split,
                seed,
            } => Model::RandomTree(train_random_tree(
                dataset,
                features_per_split.unwrap_or_else(|| default_features_per_split(f)),
                seed,
            )?),
            AlgoDescriptor::RandomForest {
                trees,
                features_per_split,
                bootstrap_fraction,
                seed,
            } => {
                let params = ForestParams {
                    trees,
                    features_per_split: features_per_split
                        .unwrap_or_else(|| default_features_per_split(f)),
                    bootstrap: bootstrap_fraction.is_some(),
                    bootstrap_fraction: bootstrap_fraction.unwrap_or(1.0),
                    seed,
                };
                Model::RandomForest(train_forest(dataset, &params)?)
            }
            AlgoDescriptor::SimpleLogistic {
                max_iterations,
                cv_folds,
                seed,
            } => Model::SimpleLogistic(train_simple_logistic(
                dataset,
                max_iterations,
                cv_folds,
                seed,
            )?),
        })
    }
}

impl fmt::Display for AlgoDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

/// Any trained classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    NaiveBayes(NbModel),
    DecisionTree(TreeModel),
    RandomTree(TreeModel),
    RandomForest(ForestModel),
    SimpleLogistic(LogitModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::NaiveBayes(_) => "nb",
            Model::DecisionTree(_) => "dt",
            Model::RandomTree(_) => "rt",
            Model::RandomForest(_) => "rf",
            Model::SimpleLogistic(_) => "sl",
        }
    }

    fn inner(&self) -> &(dyn Classifier + Sync) {
        match self {
            Model::NaiveBayes(m) => m,
            Model::DecisionTree(m) | Model::RandomTree(m) => m,
            Model::RandomForest(m) => m,
            Model::SimpleLogistic(m) => m,
        }
    }

    /// Predictions for many vectors, in input order.
    pub fn predict_all(&self, vectors: &[FeatureVector]) -> Result<Vec<Prediction>, PredictError> {
        par::map_slice(vectors, |v| self.predict(v))
            .into_iter()
            .collect()
    }
}

impl Classifier for Model {
    fn n_features(&self) -> usize {
        self.inner().n_features()
    }

    fn malware_score(&self, bits: &[bool]) -> f64 {
        self.inner().malware_score(bits)
    }

    fn predict(&self, vector: &FeatureVector) -> Result<Prediction, PredictError> {
        self.inner().predict(vector)
    }
}
