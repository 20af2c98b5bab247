//! Mutual-information ranking of binary features against the class label.

use std::fmt::Write as _;
use std::path::Path;

use crate::dataset::Dataset;
use crate::par;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RankingError {
    #[error("no instances: mutual information undefined")]
    NoInstances,
    #[error("inconsistent counts: {0}")]
    InvalidCounts(String),
    #[error("ranking needs both classes present (benign {benign}, malware {malware})")]
    SingleClass { benign: usize, malware: usize },
    #[error("k = {k} outside 1..={len}")]
    KOutOfRange { k: usize, len: usize },
}

/// Presence counts of one feature within each class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureClassCounts {
    pub present_benign: u64,
    pub present_malware: u64,
    pub n_benign: u64,
    pub n_malware: u64,
}

impl FeatureClassCounts {
    pub fn new(present_benign: u64, present_malware: u64, n_benign: u64, n_malware: u64) -> Self {
        Self {
            present_benign,
            present_malware,
            n_benign,
            n_malware,
        }
    }

    fn validate(&self) -> Result<(), RankingError> {
        if self.present_benign > self.n_benign {
            return Err(RankingError::InvalidCounts(format!(
                "{} benign positives out of {}",
                self.present_benign, self.n_benign
            )));
        }
        if self.present_malware > self.n_malware {
            return Err(RankingError::InvalidCounts(format!(
                "{} malware positives out of {}",
                self.present_malware, self.n_malware
            )));
        }
        if self.n_benign + self.n_malware == 0 {
            return Err(RankingError::NoInstances);
        }
        Ok(())
    }
}

/// Mutual information, in bits, between a binary feature and the class.
///
/// Empty cells contribute nothing (`0 log 0 = 0`); no smoothing is applied.
pub fn mutual_information(c: &FeatureClassCounts) -> Result<f64, RankingError> {
    c.validate()?;
    let n = (c.n_benign + c.n_malware) as f64;
    let present = (c.present_benign + c.present_malware) as f64;
    let absent = n - present;
    let cells = [
        (c.present_benign as f64, present, c.n_benign as f64),
        (c.present_malware as f64, present, c.n_malware as f64),
        (
            (c.n_benign - c.present_benign) as f64,
            absent,
            c.n_benign as f64,
        ),
        (
            (c.n_malware - c.present_malware) as f64,
            absent,
            c.n_malware as f64,
        ),
    ];
    let mi: f64 = cells
        .iter()
        .filter(|(joint, _, _)| *joint > 0.0)
        .map(|&(joint, row, col)| joint / n * ((joint * n) / (row * col)).log2())
        .sum();
    Ok(mi.max(0.0))
}

/// Per-feature presence counts for a whole dataset, in catalog order.
pub fn feature_counts(dataset: &Dataset) -> Vec<FeatureClassCounts> {
    let (n_benign, n_malware) = dataset.class_counts();
    par::map_indices(dataset.n_features(), |j| {
        let (mut pb, mut pm) = (0u64, 0u64);
        for (v, label) in dataset.instances() {
            if v.get(j) {
                if label.is_malware() {
                    pm += 1;
                } else {
                    pb += 1;
                }
            }
        }
        FeatureClassCounts::new(pb, pm, n_benign as u64, n_malware as u64)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedFeature {
    pub name: String,
    /// Position in the source catalog.
    pub index: usize,
    pub score: f64,
}

/// Features sorted by descending score; equal scores in ascending name order.
#[derive(Debug, Clone, PartialEq)]
pub struct MiRanking {
    entries: Vec<RankedFeature>,
}

impl MiRanking {
    pub fn from_scores(mut entries: Vec<RankedFeature>) -> Self {
        entries.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.name.cmp(&b.name))
        });
        Self { entries }
    }

    pub fn entries(&self) -> &[RankedFeature] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn top_k(&self, k: usize) -> Result<Vec<String>, RankingError> {
        Ok(self
            .top_entries(k)?
            .iter()
            .map(|e| e.name.clone())
            .collect())
    }

    pub fn top_entries(&self, k: usize) -> Result<&[RankedFeature], RankingError> {
        if k == 0 || k > self.entries.len() {
            return Err(RankingError::KOutOfRange {
                k,
                len: self.entries.len(),
            });
        }
        Ok(&self.entries[..k])
    }

    /// Catalog positions of the top `k` features, in rank order.
    pub fn top_indices(&self, k: usize) -> Result<Vec<usize>, RankingError> {
        Ok(self.top_entries(k)?.iter().map(|e| e.index).collect())
    }

    /// `rank,name,score` with six decimals, limited to the first `limit` rows.
    pub fn to_csv(&self, limit: Option<usize>) -> String {
        let take = limit.unwrap_or(self.entries.len()).min(self.entries.len());
        let mut out = String::from("rank,name,score\n");
        for (i, e) in self.entries[..take].iter().enumerate() {
            let _ = writeln!(out, "{},{},{:.6}", i + 1, e.name, e.score);
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, limit: Option<usize>) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv(limit))
    }
}

/// Scores every catalog feature of `dataset`.
pub fn rank_features(dataset: &Dataset) -> Result<MiRanking, RankingError> {
    let (benign, malware) = dataset.class_counts();
    if benign == 0 || malware == 0 {
        return Err(RankingError::SingleClass { benign, malware });
    }
    let counts = feature_counts(dataset);
    let entries = counts
        .iter()
        .zip(dataset.catalog().features())
        .enumerate()
        .map(|(index, (c, def))| {
            Ok(RankedFeature {
                name: def.name.clone(),
                index,
                score: mutual_information(c)?,
            })
        })
        .collect::<Result<Vec<_>, RankingError>>()?;
    Ok(MiRanking::from_scores(entries))
}
