use std::ops::Add;

use super::EvalError;
use crate::dataset::Label;

/// Counts indexed by true class then predicted class; `sus` is malware.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionMatrix {
    pub ben_ben: u64,
    pub ben_sus: u64,
    pub sus_ben: u64,
    pub sus_sus: u64,
}

impl ConfusionMatrix {
    pub fn new(ben_ben: u64, ben_sus: u64, sus_ben: u64, sus_sus: u64) -> Self {
        Self {
            ben_ben,
            ben_sus,
            sus_ben,
            sus_sus,
        }
    }

    pub fn total(&self) -> u64 {
        self.ben_ben + self.ben_sus + self.sus_ben + self.sus_sus
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Benign, Label::Benign) => self.ben_ben += 1,
            (Label::Benign, Label::Malware) => self.ben_sus += 1,
            (Label::Malware, Label::Benign) => self.sus_ben += 1,
            (Label::Malware, Label::Malware) => self.sus_sus += 1,
        }
    }
}

impl Add for ConfusionMatrix {
    type Output = ConfusionMatrix;

    fn add(self, o: ConfusionMatrix) -> ConfusionMatrix {
        ConfusionMatrix::new(
            self.ben_ben + o.ben_ben,
            self.ben_sus + o.ben_sus,
            self.sus_ben + o.sus_ben,
            self.sus_sus + o.sus_sus,
        )
    }
}

impl std::iter::Sum for ConfusionMatrix {
    fn sum<I: Iterator<Item = ConfusionMatrix>>(iter: I) -> Self {
        iter.fold(ConfusionMatrix::default(), Add::add)
    }
}

pub fn confusion(truth: &[Label], predicted: &[Label]) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            truth: truth.len(),
            other: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut cm = ConfusionMatrix::default();
    truth
        .iter()
        .zip(predicted)
        .for_each(|(&t, &p)| cm.record(t, p));
    Ok(cm)
}

/// Detection rates of one confusion matrix.
///
/// A rate whose denominator is zero (for example TPR with no malware rows) is
/// `None` rather than a number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub confusion: ConfusionMatrix,
    pub tpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
    pub acc: f64,
    pub err: f64,
    pub precision: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<MetricsReport, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let malware = cm.sus_ben + cm.sus_sus;
    let benign = cm.ben_ben + cm.ben_sus;
    Ok(MetricsReport {
        confusion: *cm,
        tpr: ratio(cm.sus_sus, malware),
        fnr: ratio(cm.sus_ben, malware),
        tnr: ratio(cm.ben_ben, benign),
        fpr: ratio(cm.ben_sus, benign),
        acc: (cm.ben_ben + cm.sus_sus) as f64 / total as f64,
        err: (cm.ben_sus + cm.sus_ben) as f64 / total as f64,
        precision: ratio(cm.sus_sus, cm.ben_sus + cm.sus_sus),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{Benign as B, Malware as M};

    #[test]
    fn hand_counted_confusion() {
        let cm = confusion(&[M, M, B, B], &[M, B, B, M]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(1, 1, 1, 1));
        let cm = confusion(&[M, M, B], &[B, B, B]).unwrap();
        assert_eq!(cm, ConfusionMatrix::new(1, 0, 2, 0));
        assert_eq!(
            confusion(&[M], &[]),
            Err(EvalError::LengthMismatch { truth: 1, other: 0 })
        );
        assert_eq!(confusion(&[], &[]), Err(EvalError::Empty));
    }

    #[test]
    fn worked_rates() {
        let r = metrics(&ConfusionMatrix::new(380, 20, 15, 285)).unwrap();
        assert_eq!(r.tpr, Some(0.95));
        assert_eq!(r.fpr, Some(0.05));
        assert_eq!(r.acc, 0.95);
        assert!((r.err - 0.05).abs() < 1e-15);
        assert!((r.precision.unwrap() - 0.934426).abs() < 1e-6);
    }

    #[test]
    fn degenerate_denominators() {
        let r = metrics(&ConfusionMatrix::new(4, 0, 3, 0)).unwrap();
        assert_eq!(r.precision, None);
        assert_eq!(r.tpr, Some(0.0));
        assert_eq!(r.tnr, Some(1.0));
        let perfect = metrics(&ConfusionMatrix::new(4, 0, 0, 3)).unwrap();
        assert_eq!(
            (perfect.acc, perfect.err, perfect.precision),
            (1.0, 0.0, Some(1.0))
        );
        assert_eq!(metrics(&ConfusionMatrix::default()), Err(EvalError::Empty));
    }
}
