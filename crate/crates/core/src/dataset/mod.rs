//! Labeled binary feature vectors and their CSV representation.
//!
//! A dataset CSV has header `name1,...,nameF,class`, cells `0`/`1` and a
//! lowercase `benign`/`malware` label per row. Feature columns must match the
//! catalog exactly, in order.

mod synth;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use crate::catalog::{FeatureCatalog, FeatureSetId};

pub use synth::{
    synthesize, ClassRates, SpecError, SyntheticSpec, XorInteraction, CALIBRATED_SPEC,
    DEFAULT_BACKGROUND_RATE,
};

pub const LABEL_COLUMN: &str = "class";

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("missing header row")]
    MissingHeader,
    #[error("label column absent")]
    LabelColumnAbsent,
    #[error("header has {found} feature columns, catalog has {expected}")]
    HeaderLength { expected: usize, found: usize },
    #[error("header column {column}: expected `{expected}`, found `{found}`")]
    HeaderMismatch {
        column: usize,
        expected: String,
        found: String,
    },
    #[error("row {row}, column `{column}`: expected 0 or 1, found `{value}`")]
    BadCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column `{LABEL_COLUMN}`: unknown label `{value}`")]
    UnknownLabel { row: usize, value: String },
    #[error("row {row}: expected {expected} fields, found {found}")]
    Ragged {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("instance {index}: vector has {found} bits, catalog has {expected} features")]
    VectorLength {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("{vectors} vectors but {labels} labels")]
    CountMismatch { vectors: usize, labels: usize },
}

/// Class label. `Malware` is the "suspicious" class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Benign,
    Malware,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Benign => "benign",
            Label::Malware => "malware",
        }
    }

    pub fn is_malware(self) -> bool {
        self == Label::Malware
    }

    pub fn from_malware(malware: bool) -> Self {
        if malware {
            Label::Malware
        } else {
            Label::Benign
        }
    }

    /// 0 for benign, 1 for malware.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Decision rule shared by every classifier: malware iff the malware score
    /// is strictly above one half. Exact ties are benign.
    pub fn from_score(score: f64) -> Self {
        Label::from_malware(score > 0.5)
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "benign" => Ok(Label::Benign),
            "malware" => Ok(Label::Malware),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Presence/absence bits, one per catalog feature.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FeatureVector(Vec<bool>);

impl FeatureVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// From `0`/`1` bytes; `None` on any other value.
    pub fn from_bits(bits: &[u8]) -> Option<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Some(false),
                1 => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.0[index] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn count_ones(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Keeps the given positions, in the order given.
    pub fn project(&self, indices: &[usize]) -> FeatureVector {
        FeatureVector(indices.iter().map(|&i| self.0[i]).collect())
    }
}

impl From<Vec<bool>> for FeatureVector {
    fn from(bits: Vec<bool>) -> Self {
        Self(bits)
    }
}

/// Labeled vectors aligned to a catalog.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    catalog: Arc<FeatureCatalog>,
    vectors: Vec<FeatureVector>,
    labels: Vec<Label>,
}

impl Dataset {
    pub fn new(
        catalog: impl Into<Arc<FeatureCatalog>>,
        vectors: Vec<FeatureVector>,
        labels: Vec<Label>,
    ) -> Result<Self, DatasetError> {
        let catalog = catalog.into();
        if vectors.len() != labels.len() {
            return Err(DatasetError::CountMismatch {
                vectors: vectors.len(),
                labels: labels.len(),
            });
        }
        if let Some((index, v)) = vectors
            .iter()
            .enumerate()
            .find(|(_, v)| v.len() != catalog.len())
        {
            return Err(DatasetError::VectorLength {
                index,
                expected: catalog.len(),
                found: v.len(),
            });
        }
        Ok(Self {
            catalog,
            vectors,
            labels,
        })
    }

    pub fn empty(catalog: impl Into<Arc<FeatureCatalog>>) -> Self {
        Self {
            catalog: catalog.into(),
            vectors: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn catalog(&self) -> &FeatureCatalog {
        &self.catalog
    }

    pub fn shared_catalog(&self) -> Arc<FeatureCatalog> {
        Arc::clone(&self.catalog)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.catalog.len()
    }

    pub fn vectors(&self) -> &[FeatureVector] {
        &self.vectors
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn vector(&self, index: usize) -> &FeatureVector {
        &self.vectors[index]
    }

    pub fn label(&self, index: usize) -> Label {
        self.labels[index]
    }

    pub fn instances(&self) -> impl Iterator<Item = (&FeatureVector, Label)> {
        self.vectors.iter().zip(self.labels.iter().copied())
    }

    /// `(n_benign, n_malware)`.
    pub fn class_counts(&self) -> (usize, usize) {
        let malware = self.labels.iter().filter(|l| l.is_malware()).count();
        (self.labels.len() - malware, malware)
    }

    pub fn has_both_classes(&self) -> bool {
        let (b, m) = self.class_counts();
        b > 0 && m > 0
    }

    /// Rows at `indices` (repeats allowed), sharing this catalog.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            catalog: Arc::clone(&self.catalog),
            vectors: indices.iter().map(|&i| self.vectors[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Keeps only the feature columns at `indices`, in the order given.
    pub fn project(&self, indices: &[usize]) -> Dataset {
        Dataset {
            catalog: Arc::new(self.catalog.subset(indices)),
            vectors: self.vectors.iter().map(|v| v.project(indices)).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn select_features(&self, set: FeatureSetId) -> Dataset {
        if set == FeatureSetId::Capf {
            return self.clone();
        }
        self.project(&self.catalog.indices_of(set))
    }

    pub fn read_csv(
        path: impl AsRef<Path>,
        catalog: impl Into<Arc<FeatureCatalog>>,
    ) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_csv(&text, catalog)
    }

    pub fn parse_csv(
        text: &str,
        catalog: impl Into<Arc<FeatureCatalog>>,
    ) -> Result<Self, DatasetError> {
        let catalog = catalog.into();
        let table = parse_table(text, &catalog, true)?;
        let labels = table.labels.expect("labels required");
        Ok(Self {
            catalog,
            vectors: table.vectors,
            labels,
        })
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let path = path.as_ref();
        let io_err = |source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        };
        let file = fs::File::create(path).map_err(io_err)?;
        let mut out = io::BufWriter::new(file);
        self.write_to(&mut out).map_err(io_err)?;
        out.flush().map_err(io_err)
    }

    pub fn write_to<W: Write>(&self, out: W) -> io::Result<()> {
        write_table(out, &self.catalog, &self.vectors, Some(&self.labels))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("dataset CSV is UTF-8")
    }
}

/// Vectors read from a dataset CSV whose `class` column may be absent.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    pub vectors: Vec<FeatureVector>,
    pub labels: Option<Vec<Label>>,
}

impl VectorTable {
    pub fn read_csv(
        path: impl AsRef<Path>,
        catalog: &FeatureCatalog,
    ) -> Result<Self, DatasetError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        parse_table(&text, catalog, false)
    }

    pub fn parse_csv(text: &str, catalog: &FeatureCatalog) -> Result<Self, DatasetError> {
        parse_table(text, catalog, false)
    }

    pub fn write_to<W: Write>(&self, out: W, catalog: &FeatureCatalog) -> io::Result<()> {
        write_table(out, catalog, &self.vectors, self.labels.as_deref())
    }
}

fn write_table<W: Write>(
    out: W,
    catalog: &FeatureCatalog,
    vectors: &[FeatureVector],
    labels: Option<&[Label]>,
) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    let header: Vec<&str> = catalog.names().collect();
    out.write_all(header.join(",").as_bytes())?;
    if labels.is_some() {
        write!(out, ",{LABEL_COLUMN}")?;
    }
    out.write_all(b"\n")?;
    let mut line = Vec::with_capacity(catalog.len() * 2 + 8);
    for (i, v) in vectors.iter().enumerate() {
        line.clear();
        for (j, &bit) in v.bits().iter().enumerate() {
            if j > 0 {
                line.push(b',');
            }
            line.push(if bit { b'1' } else { b'0' });
        }
        if let Some(labels) = labels {
            if !v.is_empty() {
                line.push(b',');
            }
            line.extend_from_slice(labels[i].as_str().as_bytes());
        }
        line.push(b'\n');
        out.write_all(&line)?;
    }
    out.flush()
}

fn parse_table(
    text: &str,
    catalog: &FeatureCatalog,
    require_labels: bool,
) -> Result<VectorTable, DatasetError> {
    let mut lines = text.lines().map(|l| l.trim_end_matches('\r'));
    let header = lines.next().ok_or(DatasetError::MissingHeader)?;
    let columns: Vec<&str> = header.split(',').collect();

    let has_label = columns.last() == Some(&LABEL_COLUMN);
    if require_labels && !has_label {
        return Err(DatasetError::LabelColumnAbsent);
    }
    let feature_columns = if has_label {
        &columns[..columns.len() - 1]
    } else {
        &columns[..]
    };
    // A catalog-less header line of "" splits into one empty column.
    let feature_columns: &[&str] = if feature_columns == [""] {
        &[]
    } else {
        feature_columns
    };
    for (column, (found, expected)) in feature_columns.iter().zip(catalog.names()).enumerate() {
        if *found != expected {
            return Err(DatasetError::HeaderMismatch {
                column: column + 1,
                expected: expected.to_string(),
                found: found.to_string(),
            });
        }
    }
    if feature_columns.len() != catalog.len() {
        return Err(DatasetError::HeaderLength {
            expected: catalog.len(),
            found: feature_columns.len(),
        });
    }

    let n = catalog.len();
    let expected_fields = n + usize::from(has_label);
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected_fields {
            return Err(DatasetError::Ragged {
                row,
                expected: expected_fields,
                found: fields.len(),
            });
        }
        let mut bits = Vec::with_capacity(n);
        for (j, cell) in fields[..n].iter().enumerate() {
            match *cell {
                "0" => bits.push(false),
                "1" => bits.push(true),
                other => {
                    return Err(DatasetError::BadCell {
                        row,
                        column: catalog.features()[j].name.clone(),
                        value: other.to_string(),
                    })
                }
            }
        }
        if has_label {
            let label = fields[n]
                .parse::<Label>()
                .map_err(|value| DatasetError::UnknownLabel { row, value })?;
            labels.push(label);
        }
        vectors.push(FeatureVector(bits));
    }
    Ok(VectorTable {
        vectors,
        labels: has_label.then_some(labels),
    })
}
