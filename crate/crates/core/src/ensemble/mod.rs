//! Ensembles: bagged random trees and LogitBoost with single-feature base
//! learners.

mod forest;
mod logit;

pub use forest::{
    predict_forest, train_forest, tree_seed, ForestModel, ForestParams, DEFAULT_TREES,
};
pub use logit::{
    log_likelihood, logitboost_response, predict_simple_logistic, train_simple_logistic,
    LogitModel, SimpleRegressor, WorkingResponse, DEFAULT_CV_FOLDS, DEFAULT_MAX_ITERATIONS,
    WEIGHT_FLOOR, Z_MAX,
};
