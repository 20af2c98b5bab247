//! Bernoulli naive Bayes with Laplace smoothing.

use crate::dataset::{Dataset, FeatureVector};
use crate::error::{PredictError, TrainError};
use crate::model::{Classifier, Prediction};

pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct NbModel {
    alpha: f64,
    prior_malware: f64,
    /// P(bit = 1 | benign), per feature.
    theta_benign: Vec<f64>,
    /// P(bit = 1 | malware), per feature.
    theta_malware: Vec<f64>,
}

/// theta = (count(bit = 1, class) + alpha) / (n_class + 2 alpha); prior is the
/// malware fraction.
pub fn train_nb(dataset: &Dataset, alpha: f64) -> Result<NbModel, TrainError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(TrainError::InvalidParameter(format!(
            "smoothing alpha must be > 0, got {alpha}"
        )));
    }
    let (n_benign, n_malware) = dataset.class_counts();
    if n_benign == 0 || n_malware == 0 {
        return Err(TrainError::SingleClass {
            benign: n_benign,
            malware: n_malware,
        });
    }
    let f = dataset.n_features();
    let mut ones = [vec![0u64; f], vec![0u64; f]];
    for (v, label) in dataset.instances() {
        let row = &mut ones[label.index()];
        for (j, &bit) in v.bits().iter().enumerate() {
            row[j] += u64::from(bit);
        }
    }
    let smooth = |count: u64, n: usize| (count as f64 + alpha) / (n as f64 + 2.0 * alpha);
    Ok(NbModel {
        alpha,
        prior_malware: n_malware as f64 / (n_benign + n_malware) as f64,
        theta_benign: ones[0].iter().map(|&c| smooth(c, n_benign)).collect(),
        theta_malware: ones[1].iter().map(|&c| smooth(c, n_malware)).collect(),
    })
}

impl NbModel {
    /// Builds a model from explicit parameters; all probabilities must lie
    /// strictly inside (0, 1).
    pub fn from_parameters(
        alpha: f64,
        prior_malware: f64,
        theta_benign: Vec<f64>,
        theta_malware: Vec<f64>,
    ) -> Result<Self, TrainError> {
        if theta_benign.len() != theta_malware.len() {
            return Err(TrainError::InvalidParameter(
                "benign and malware parameter vectors differ in length".into(),
            ));
        }
        let open_unit = |p: f64| p > 0.0 && p < 1.0;
        if !open_unit(prior_malware) {
            return Err(TrainError::InvalidParameter(format!(
                "prior {prior_malware} outside (0, 1)"
            )));
        }
        if let Some(p) = theta_benign
            .iter()
            .chain(&theta_malware)
            .find(|&&p| !open_unit(p))
        {
            return Err(TrainError::InvalidParameter(format!(
                "probability {p} outside (0, 1)"
            )));
        }
        Ok(Self {
            alpha,
            prior_malware,
            theta_benign,
            theta_malware,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn prior_malware(&self) -> f64 {
        self.prior_malware
    }

    pub fn theta_benign(&self) -> &[f64] {
        &self.theta_benign
    }

    pub fn theta_malware(&self) -> &[f64] {
        &self.theta_malware
    }

    /// The same model restricted to a subset of features.
    pub fn project(&self, indices: &[usize]) -> NbModel {
        NbModel {
            alpha: self.alpha,
            prior_malware: self.prior_malware,
            theta_benign: indices.iter().map(|&i| self.theta_benign[i]).collect(),
            theta_malware: indices.iter().map(|&i| self.theta_malware[i]).collect(),
        }
    }

    /// Log joint likelihoods `(ln P(v, benign), ln P(v, malware))`.
    pub fn log_joint(&self, bits: &[bool]) -> (f64, f64) {
        let mut benign = (1.0 - self.prior_malware).ln();
        let mut malware = self.prior_malware.ln();
        for ((&bit, &tb), &tm) in bits.iter().zip(&self.theta_benign).zip(&self.theta_malware) {
            if bit {
                benign += tb.ln();
                malware += tm.ln();
            } else {
                benign += (1.0 - tb).ln();
                malware += (1.0 - tm).ln();
            }
        }
        (benign, malware)
    }
}

impl Classifier for NbModel {
    fn n_features(&self) -> usize {
        self.theta_benign.len()
    }

    fn malware_score(&self, bits: &[bool]) -> f64 {
        let (benign, malware) = self.log_joint(bits);
        1.0 / (1.0 + (benign - malware).exp())
    }
}

pub fn predict_nb(model: &NbModel, vector: &FeatureVector) -> Result<Prediction, PredictError> {
    model.predict(vector)
}
