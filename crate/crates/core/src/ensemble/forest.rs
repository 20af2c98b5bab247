use rand::Rng as _;

use crate::dataset::{Dataset, FeatureVector, Label};
use crate::error::{PredictError, TrainError};
use crate::model::{default_features_per_split, Classifier, Prediction};
use crate::par;
use crate::rng::{derive_seed, rng_from_seed_stream};
use crate::trees::{check_features_per_split, random_tree_on, TreeModel};

pub const DEFAULT_TREES: usize = 10;

/// Stream index of the bootstrap draw; stream 0 of the same seed drives
/// split-feature sampling inside the tree.
const BOOTSTRAP_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub trees: usize,
    pub features_per_split: usize,
    /// When false every tree sees the full training set in order.
    pub bootstrap: bool,
    /// Bootstrap sample size as a fraction of N, in (0, 1].
    pub bootstrap_fraction: f64,
    pub seed: u64,
}

impl ForestParams {
    /// T = 10, k = floor(log2 F) + 1, full-size bootstrap.
    pub fn with_defaults(n_features: usize, seed: u64) -> Self {
        Self {
            trees: DEFAULT_TREES,
            features_per_split: default_features_per_split(n_features),
            bootstrap: true,
            bootstrap_fraction: 1.0,
            seed,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<(), TrainError> {
        if self.trees == 0 {
            return Err(TrainError::InvalidParameter(
                "forest needs at least one tree".into(),
            ));
        }
        check_features_per_split(self.features_per_split, n_features)?;
        if !(self.bootstrap_fraction > 0.0 && self.bootstrap_fraction <= 1.0) {
            return Err(TrainError::InvalidParameter(format!(
                "bootstrap fraction {} outside (0, 1]",
                self.bootstrap_fraction
            )));
        }
        Ok(())
    }
}

/// Seed of tree `index` in a forest with master seed `master`.
pub fn tree_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<TreeModel>,
    params: ForestParams,
    n_features: usize,
}

impl ForestModel {
    pub fn from_parts(
        trees: Vec<TreeModel>,
        params: ForestParams,
        n_features: usize,
    ) -> Result<Self, TrainError> {
        if trees.len() != params.trees {
            return Err(TrainError::InvalidParameter(format!(
                "{} trees but params say {}",
                trees.len(),
                params.trees
            )));
        }
        if trees.iter().any(|t| t.n_features() != n_features) {
            return Err(TrainError::InvalidParameter(
                "tree feature count differs from forest".into(),
            ));
        }
        Ok(Self {
            trees,
            params,
            n_features,
        })
    }

    pub fn trees(&self) -> &[TreeModel] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn malware_votes(&self, bits: &[bool]) -> usize {
        self.trees
            .iter()
            .filter(|t| t.vote(bits) == Label::Malware)
            .count()
    }
}

impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    /// Fraction of trees voting malware.
    fn malware_score(&self, bits: &[bool]) -> f64 {
        self.malware_votes(bits) as f64 / self.trees.len() as f64
    }
}

/// Trains each tree on its own bootstrap sample with its own derived seed.
/// Trees are independent, so the result does not depend on how many threads
/// build them.
pub fn train_forest(dataset: &Dataset, params: &ForestParams) -> Result<ForestModel, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    params.validate(dataset.n_features())?;
    let n = dataset.len();
    let sample_size = ((params.bootstrap_fraction * n as f64).ceil() as usize).clamp(1, n);

    let trees = par::map_indices(params.trees, |i| {
        let seed = tree_seed(params.seed, i);
        let rows: Vec<usize> = if params.bootstrap {
            let mut rng = rng_from_seed_stream(seed, BOOTSTRAP_STREAM);
            (0..sample_size).map(|_| rng.gen_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        random_tree_on(dataset, &rows, params.features_per_split, seed)
    });
    Ok(ForestModel {
        trees,
        params: *params,
        n_features: dataset.n_features(),
    })
}

pub fn predict_forest(
    model: &ForestModel,
    vector: &FeatureVector,
) -> Result<Prediction, PredictError> {
    model.predict(vector)
}
