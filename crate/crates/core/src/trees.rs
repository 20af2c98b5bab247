//! Binary-split decision trees.
//!
//! Every feature is binary, so a split on feature `j` sends bit 0 to the
//! `absent` child and bit 1 to the `present` child, and a feature never needs
//! testing twice on one path. Splits maximise impurity decrease: parent
//! impurity minus the size-weighted impurity of the two children. A node
//! keeps splitting while some candidate separates its rows, even at zero
//! decrease, so parity-style interactions such as XOR are still learned. It
//! becomes a leaf when pure, when fewer than two rows reach it, or when every
//! candidate leaves one side empty.
//!
//! * Decision tree: every unused feature is a candidate; optional
//!   reduced-error pruning against a stratified 20% holdout.
//! * Random tree: `k` candidates sampled without replacement per node, entropy
//!   criterion, never pruned.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;

use rand::seq::index;

use crate::dataset::{Dataset, FeatureVector, Label};
use crate::error::{PredictError, TrainError};
use crate::model::{Classifier, Prediction};
use crate::rng::{rng_from_seed, Rng};

/// Impurity decreases closer than this count as tied.
const GAIN_TIE: f64 = 1e-12;

/// Fraction of each class held out for reduced-error pruning.
pub const PRUNE_HOLDOUT_FRACTION: f64 = 0.2;

/// Seed for the pruning holdout draw when none is supplied.
pub const DEFAULT_PRUNE_SEED: u64 = 0;

/// Instance counts per class at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct ClassDistribution {
    pub benign: u64,
    pub malware: u64,
}

impl ClassDistribution {
    pub fn new(benign: u64, malware: u64) -> Self {
        Self { benign, malware }
    }

    pub fn total(&self) -> u64 {
        self.benign + self.malware
    }

    pub fn add_label(&mut self, label: Label) {
        match label {
            Label::Benign => self.benign += 1,
            Label::Malware => self.malware += 1,
        }
    }

    /// `[f_benign, f_malware]`; both zero for an empty distribution.
    pub fn fractions(&self) -> [f64; 2] {
        let n = self.total();
        if n == 0 {
            return [0.0, 0.0];
        }
        [
            self.benign as f64 / n as f64,
            self.malware as f64 / n as f64,
        ]
    }

    /// Malware fraction; one half for an empty distribution.
    pub fn malware_fraction(&self) -> f64 {
        let n = self.total();
        if n == 0 {
            0.5
        } else {
            self.malware as f64 / n as f64
        }
    }

    /// Majority class, ties to benign.
    pub fn majority(&self) -> Label {
        Label::from_malware(self.malware > self.benign)
    }

    pub fn is_pure(&self) -> bool {
        self.benign == 0 || self.malware == 0
    }
}

impl Add for ClassDistribution {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.benign + rhs.benign, self.malware + rhs.malware)
    }
}

/// Information entropy in bits, `-sum f_i log2 f_i` with `0 log 0 = 0`.
pub fn entropy(fractions: &[f64]) -> f64 {
    let h: f64 = fractions
        .iter()
        .filter(|&&f| f > 0.0)
        .map(|&f| -f * f.log2())
        .sum();
    h.max(0.0)
}

/// Gini impurity, `1 - sum f_i^2`.
pub fn gini(fractions: &[f64]) -> f64 {
    (1.0 - fractions.iter().map(|f| f * f).sum::<f64>()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitCriterion {
    Entropy,
    Gini,
}

impl SplitCriterion {
    pub fn impurity(self, dist: &ClassDistribution) -> f64 {
        let fractions = dist.fractions();
        match self {
            SplitCriterion::Entropy => entropy(&fractions),
            SplitCriterion::Gini => gini(&fractions),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SplitCriterion::Entropy => "entropy",
            SplitCriterion::Gini => "gini",
        }
    }
}

impl FromStr for SplitCriterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "entropy" => Ok(SplitCriterion::Entropy),
            "gini" => Ok(SplitCriterion::Gini),
            _ => Err(format!(
                "unknown split criterion `{s}` (expected entropy or gini)"
            )),
        }
    }
}

impl fmt::Display for SplitCriterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeNode {
    /// Training distribution that reached this leaf.
    Leaf(ClassDistribution),
    Split {
        feature: usize,
        absent: Box<TreeNode>,
        present: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn leaf_for(&self, bits: &[bool]) -> &ClassDistribution {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf(dist) => return dist,
                TreeNode::Split {
                    feature,
                    absent,
                    present,
                } => node = if bits[*feature] { present } else { absent },
            }
        }
    }

    /// Sum of leaf distributions: the training distribution at this node.
    pub fn distribution(&self) -> ClassDistribution {
        match self {
            TreeNode::Leaf(d) => *d,
            TreeNode::Split {
                absent, present, ..
            } => absent.distribution() + present.distribution(),
        }
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 0,
            TreeNode::Split {
                absent, present, ..
            } => 1 + absent.depth().max(present.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 1,
            TreeNode::Split {
                absent, present, ..
            } => 1 + absent.node_count() + present.node_count(),
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf(_) => 1,
            TreeNode::Split {
                absent, present, ..
            } => absent.leaf_count() + present.leaf_count(),
        }
    }

    /// Largest feature index referenced by any split.
    pub fn max_feature(&self) -> Option<usize> {
        match self {
            TreeNode::Leaf(_) => None,
            TreeNode::Split {
                feature,
                absent,
                present,
            } => Some(
                (*feature)
                    .max(absent.max_feature().unwrap_or(0))
                    .max(present.max_feature().unwrap_or(0)),
            ),
        }
    }

    /// True if no feature is tested twice on any root-to-leaf path.
    pub fn paths_use_distinct_features(&self) -> bool {
        fn walk(node: &TreeNode, path: &mut Vec<usize>) -> bool {
            match node {
                TreeNode::Leaf(_) => true,
                TreeNode::Split {
                    feature,
                    absent,
                    present,
                } => {
                    if path.contains(feature) {
                        return false;
                    }
                    path.push(*feature);
                    let ok = walk(absent, path) && walk(present, path);
                    path.pop();
                    ok
                }
            }
        }
        walk(self, &mut Vec::new())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub criterion: SplitCriterion,
    pub prune: bool,
    /// Candidate features sampled per split; 0 means all unused features.
    pub features_per_split: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeModel {
    root: TreeNode,
    params: TreeParams,
    n_features: usize,
}

impl TreeModel {
    pub fn from_parts(
        root: TreeNode,
        params: TreeParams,
        n_features: usize,
    ) -> Result<Self, TrainError> {
        if let Some(max) = root.max_feature() {
            if max >= n_features {
                return Err(TrainError::InvalidParameter(format!(
                    "split on feature {max} but model has {n_features} features"
                )));
            }
        }
        if !root.paths_use_distinct_features() {
            return Err(TrainError::InvalidParameter(
                "feature repeated on a tree path".into(),
            ));
        }
        Ok(Self {
            root,
            params,
            n_features,
        })
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn node_count(&self) -> usize {
        self.root.node_count()
    }

    /// Leaf-majority vote, ties to benign.
    pub fn vote(&self, bits: &[bool]) -> Label {
        Label::from_score(self.root.leaf_for(bits).malware_fraction())
    }
}

impl Classifier for TreeModel {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn malware_score(&self, bits: &[bool]) -> f64 {
        self.root.leaf_for(bits).malware_fraction()
    }
}

pub fn predict_tree(model: &TreeModel, vector: &FeatureVector) -> Result<Prediction, PredictError> {
    model.predict(vector)
}

/// Greedy tree over all features. With `prune`, grows on 80% of each class
/// and prunes against the rest (holdout drawn with [`DEFAULT_PRUNE_SEED`]).
pub fn train_decision_tree(
    dataset: &Dataset,
    criterion: SplitCriterion,
    prune: bool,
) -> Result<TreeModel, TrainError> {
    train_decision_tree_seeded(dataset, criterion, prune, DEFAULT_PRUNE_SEED)
}

/// As [`train_decision_tree`], with an explicit seed for the pruning holdout.
pub fn train_decision_tree_seeded(
    dataset: &Dataset,
    criterion: SplitCriterion,
    prune: bool,
    seed: u64,
) -> Result<TreeModel, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let params = TreeParams {
        criterion,
        prune,
        features_per_split: 0,
        seed,
    };
    let all: Vec<usize> = (0..dataset.len()).collect();
    let root = if prune {
        let (grow_set, holdout) = pruning_split(dataset, seed);
        if holdout.is_empty() {
            grow(dataset, &all, criterion, 0, seed)
        } else {
            let unpruned = grow(dataset, &grow_set, criterion, 0, seed);
            reduced_error_prune(unpruned, dataset, &holdout)
        }
    } else {
        grow(dataset, &all, criterion, 0, seed)
    };
    Ok(TreeModel {
        root,
        params,
        n_features: dataset.n_features(),
    })
}

/// Unpruned entropy tree choosing among `k` random unused features per split.
pub fn train_random_tree(dataset: &Dataset, k: usize, seed: u64) -> Result<TreeModel, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    check_features_per_split(k, dataset.n_features())?;
    let all: Vec<usize> = (0..dataset.len()).collect();
    Ok(random_tree_on(dataset, &all, k, seed))
}

pub(crate) fn check_features_per_split(k: usize, n_features: usize) -> Result<(), TrainError> {
    if k == 0 || k > n_features {
        return Err(TrainError::InvalidParameter(format!(
            "features per split k = {k} outside 1..={n_features}"
        )));
    }
    Ok(())
}

/// Random tree on a multiset of row indices (bootstrap samples repeat rows).
pub(crate) fn random_tree_on(dataset: &Dataset, rows: &[usize], k: usize, seed: u64) -> TreeModel {
    TreeModel {
        root: grow(dataset, rows, SplitCriterion::Entropy, k, seed),
        params: TreeParams {
            criterion: SplitCriterion::Entropy,
            prune: false,
            features_per_split: k,
            seed,
        },
        n_features: dataset.n_features(),
    }
}

/// Stratified `(grow, holdout)` partition of row indices used for pruning.
/// Each class contributes `floor(n_class * 0.2)` rows to the holdout.
pub fn pruning_split(dataset: &Dataset, seed: u64) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;

    let mut rng = rng_from_seed(seed);
    let mut grow_set = Vec::new();
    let mut holdout = Vec::new();
    for class in [Label::Benign, Label::Malware] {
        let mut rows: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.label(i) == class)
            .collect();
        rows.shuffle(&mut rng);
        let n_hold = (rows.len() as f64 * PRUNE_HOLDOUT_FRACTION).floor() as usize;
        holdout.extend_from_slice(&rows[..n_hold]);
        grow_set.extend_from_slice(&rows[n_hold..]);
    }
    grow_set.sort_unstable();
    holdout.sort_unstable();
    (grow_set, holdout)
}

/// Bottom-up reduced-error pruning: a subtree becomes a leaf whenever that
/// leaf makes no more holdout errors than the subtree does.
pub fn reduced_error_prune(node: TreeNode, dataset: &Dataset, holdout: &[usize]) -> TreeNode {
    prune_node(node, dataset, holdout).0
}

fn prune_node(node: TreeNode, dataset: &Dataset, holdout: &[usize]) -> (TreeNode, usize) {
    let errors_as_leaf = |dist: &ClassDistribution| {
        let majority = dist.majority();
        holdout
            .iter()
            .filter(|&&i| dataset.label(i) != majority)
            .count()
    };
    match node {
        TreeNode::Leaf(dist) => {
            let errors = errors_as_leaf(&dist);
            (TreeNode::Leaf(dist), errors)
        }
        TreeNode::Split {
            feature,
            absent,
            present,
        } => {
            let (with_bit, without_bit): (Vec<usize>, Vec<usize>) = holdout
                .iter()
                .partition(|&&i| dataset.vector(i).get(feature));
            let (absent, absent_errors) = prune_node(*absent, dataset, &without_bit);
            let (present, present_errors) = prune_node(*present, dataset, &with_bit);
            let subtree_errors = absent_errors + present_errors;
            let merged = absent.distribution() + present.distribution();
            let leaf_errors = errors_as_leaf(&merged);
            if leaf_errors <= subtree_errors {
                (TreeNode::Leaf(merged), leaf_errors)
            } else {
                (
                    TreeNode::Split {
                        feature,
                        absent: Box::new(absent),
                        present: Box::new(present),
                    },
                    subtree_errors,
                )
            }
        }
    }
}

fn grow(
    dataset: &Dataset,
    rows: &[usize],
    criterion: SplitCriterion,
    k: usize,
    seed: u64,
) -> TreeNode {
    let mut grower = Grower {
        dataset,
        criterion,
        k,
        rng: rng_from_seed(seed),
        used: vec![false; dataset.n_features()],
    };
    grower.grow(rows.to_vec())
}

struct Grower<'a> {
    dataset: &'a Dataset,
    criterion: SplitCriterion,
    k: usize,
    rng: Rng,
    used: Vec<bool>,
}

impl Grower<'_> {
    fn distribution(&self, rows: &[usize]) -> ClassDistribution {
        let mut dist = ClassDistribution::default();
        for &i in rows {
            dist.add_label(self.dataset.label(i));
        }
        dist
    }

    fn split_counts(
        &self,
        rows: &[usize],
        feature: usize,
    ) -> (ClassDistribution, ClassDistribution) {
        let mut absent = ClassDistribution::default();
        let mut present = ClassDistribution::default();
        for &i in rows {
            let label = self.dataset.label(i);
            if self.dataset.vector(i).get(feature) {
                present.add_label(label);
            } else {
                absent.add_label(label);
            }
        }
        (absent, present)
    }

    fn candidates(&mut self) -> Vec<usize> {
        let unused: Vec<usize> = (0..self.used.len()).filter(|&j| !self.used[j]).collect();
        if self.k == 0 || self.k >= unused.len() {
            return unused;
        }
        let mut picked: Vec<usize> = index::sample(&mut self.rng, unused.len(), self.k)
            .into_iter()
            .map(|i| unused[i])
            .collect();
        picked.sort_unstable();
        picked
    }

    fn grow(&mut self, rows: Vec<usize>) -> TreeNode {
        let dist = self.distribution(&rows);
        if dist.is_pure() || rows.len() < 2 {
            return TreeNode::Leaf(dist);
        }
        let candidates = self.candidates();
        if candidates.is_empty() {
            return TreeNode::Leaf(dist);
        }

        let parent = self.criterion.impurity(&dist);
        let n = dist.total() as f64;
        let mut best: Option<(usize, f64)> = None;
        for &feature in &candidates {
            let (absent, present) = self.split_counts(&rows, feature);
            if absent.total() == 0 || present.total() == 0 {
                continue;
            }
            let children = absent.total() as f64 / n * self.criterion.impurity(&absent)
                + present.total() as f64 / n * self.criterion.impurity(&present);
            let gain = parent - children;
            if best.is_none_or(|(_, g)| gain > g + GAIN_TIE) {
                best = Some((feature, gain));
            }
        }
        let Some((feature, _)) = best else {
            return TreeNode::Leaf(dist);
        };

        let (with_bit, without_bit): (Vec<usize>, Vec<usize>) = rows
            .into_iter()
            .partition(|&i| self.dataset.vector(i).get(feature));
        self.used[feature] = true;
        let absent = self.grow(without_bit);
        let present = self.grow(with_bit);
        self.used[feature] = false;
        TreeNode::Split {
            feature,
            absent: Box::new(absent),
            present: Box::new(present),
        }
    }
}
