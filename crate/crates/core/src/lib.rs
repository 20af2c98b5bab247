//! Static-feature Android malware classification.
//!
//! The pipeline runs from a [`catalog::FeatureCatalog`] of permission, API and
//! command features, through [`extract`] (application tree to bit vector) and
//! [`ranking`] (mutual information), to five classifiers: [`bayes`], the
//! decision and random trees in [`trees`], and the forest and LogitBoost
//! models in [`ensemble`]. [`eval`] cross-validates and compares them.
//!
//! Parallel work goes through rayon when the `parallel` feature is enabled
//! (the default). Results do not depend on the thread count.

pub mod bayes;
pub mod catalog;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod eval;
pub mod extract;
pub mod model;
pub mod modelfile;
pub mod par;
pub mod ranking;
pub mod rng;
pub mod trees;

pub use catalog::{FeatureCatalog, FeatureCategory, FeatureDef, FeatureSetId};
pub use dataset::{Dataset, FeatureVector, Label};
pub use error::{Error, PredictError, TrainError};
pub use model::{AlgoDescriptor, Classifier, Model, Prediction};
