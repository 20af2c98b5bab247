use crate::dataset::DatasetError;

/// Failure to fit a model.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum TrainError {
    #[error("training set is empty")]
    EmptyDataset,
    #[error("training needs both classes present (benign {benign}, malware {malware})")]
    SingleClass { benign: usize, malware: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Failure to score a vector.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PredictError {
    #[error("vector has {found} features, model expects {expected}")]
    LengthMismatch { expected: usize, found: usize },
}

/// Crate-level error for pipelines that cross module boundaries.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Catalog(#[from] crate::catalog::CatalogError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Spec(#[from] crate::dataset::SpecError),
    #[error(transparent)]
    Extract(#[from] crate::extract::ExtractError),
    #[error(transparent)]
    Ranking(#[from] crate::ranking::RankingError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Predict(#[from] PredictError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    ModelFile(#[from] crate::modelfile::ModelFileError),
}
