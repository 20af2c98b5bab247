//! Feature catalog: the ordered registry of named binary features.
//!
//! The position of a feature in the catalog is its bit position in every
//! [`FeatureVector`](crate::dataset::FeatureVector). Permission features form
//! the PF set; API and command features form the AF set; CAPF is everything.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

const HEADER: &str = "name,category,pattern";
const DEFAULT_CATALOG: &str = include_str!("../data/default_catalog.csv");

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read catalog {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no features defined")]
    Empty,
    #[error("line {line}: expected header `{HEADER}`")]
    BadHeader { line: usize },
    #[error("line {line}: expected 3 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: empty feature name")]
    EmptyName { line: usize },
    #[error("line {line}: duplicate feature name `{name}`")]
    DuplicateName { line: usize, name: String },
    #[error("line {line}: unknown category `{value}`")]
    UnknownCategory { line: usize, value: String },
    #[error("line {line}: empty pattern for `{name}`")]
    EmptyPattern { line: usize, name: String },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureCategory {
    Permission,
    Api,
    Command,
}

impl FeatureCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureCategory::Permission => "PERMISSION",
            FeatureCategory::Api => "API",
            FeatureCategory::Command => "COMMAND",
        }
    }

    /// The feature set a category belongs to. Fixed: permissions are PF,
    /// everything else is AF.
    pub fn feature_set(self) -> FeatureSetId {
        match self {
            FeatureCategory::Permission => FeatureSetId::Pf,
            FeatureCategory::Api | FeatureCategory::Command => FeatureSetId::Af,
        }
    }
}

impl FromStr for FeatureCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "PERMISSION" => Ok(FeatureCategory::Permission),
            "API" => Ok(FeatureCategory::Api),
            "COMMAND" => Ok(FeatureCategory::Command),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for FeatureCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Permission features (PF), app-attribute features (AF: API calls and
/// commands), or the combined set (CAPF).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureSetId {
    Pf,
    Af,
    Capf,
}

impl FeatureSetId {
    pub const ALL: [FeatureSetId; 3] = [FeatureSetId::Pf, FeatureSetId::Af, FeatureSetId::Capf];

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSetId::Pf => "PF",
            FeatureSetId::Af => "AF",
            FeatureSetId::Capf => "CAPF",
        }
    }

    pub fn contains(self, category: FeatureCategory) -> bool {
        self == FeatureSetId::Capf || category.feature_set() == self
    }
}

impl FromStr for FeatureSetId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pf" => Ok(FeatureSetId::Pf),
            "af" => Ok(FeatureSetId::Af),
            "capf" => Ok(FeatureSetId::Capf),
            _ => Err(format!(
                "unknown feature set `{s}` (expected pf, af or capf)"
            )),
        }
    }
}

impl fmt::Display for FeatureSetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureDef {
    pub name: String,
    pub category: FeatureCategory,
    /// Literal detection token. For permissions, the fully qualified
    /// permission name as it appears in the manifest.
    pub pattern: String,
}

impl FeatureDef {
    pub fn new(
        name: impl Into<String>,
        category: FeatureCategory,
        pattern: impl Into<String>,
    ) -> Self {
        Self {
            name: name.into(),
            category,
            pattern: pattern.into(),
        }
    }
}

/// An ordered, validated list of features. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureCatalog {
    features: Vec<FeatureDef>,
    index: HashMap<String, usize>,
}

impl FeatureCatalog {
    /// Validates and wraps `features`. Errors report the line the entry
    /// would occupy in a catalog file (header is line 1).
    pub fn new(features: Vec<FeatureDef>) -> Result<Self, CatalogError> {
        let mut index = HashMap::with_capacity(features.len());
        for (i, def) in features.iter().enumerate() {
            let line = i + 2;
            if def.name.is_empty() {
                return Err(CatalogError::EmptyName { line });
            }
            if def.pattern.is_empty() {
                return Err(CatalogError::EmptyPattern {
                    line,
                    name: def.name.clone(),
                });
            }
            if index.insert(def.name.clone(), i).is_some() {
                return Err(CatalogError::DuplicateName {
                    line,
                    name: def.name.clone(),
                });
            }
        }
        Ok(Self { features, index })
    }

    /// The shipped 179-feature catalog (125 permissions, 54 API/command).
    pub fn default_catalog() -> Self {
        Self::parse(DEFAULT_CATALOG).expect("shipped catalog is valid")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CatalogError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CatalogError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CatalogError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let header = lines.find(|(_, l)| !l.trim().is_empty());
        let Some((header_line, header)) = header else {
            return Err(CatalogError::Empty);
        };
        if header.trim_end_matches('\r') != HEADER {
            return Err(CatalogError::BadHeader { line: header_line });
        }

        let mut features = Vec::new();
        let mut index = HashMap::new();
        for (line, raw) in lines {
            let raw = raw.trim_end_matches('\r');
            if raw.is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split(',').collect();
            if fields.len() != 3 {
                return Err(CatalogError::FieldCount {
                    line,
                    found: fields.len(),
                });
            }
            let (name, category, pattern) = (fields[0], fields[1], fields[2]);
            if name.is_empty() {
                return Err(CatalogError::EmptyName { line });
            }
            let category = category
                .parse::<FeatureCategory>()
                .map_err(|value| CatalogError::UnknownCategory { line, value })?;
            if pattern.is_empty() {
                return Err(CatalogError::EmptyPattern {
                    line,
                    name: name.to_string(),
                });
            }
            if index.insert(name.to_string(), features.len()).is_some() {
                return Err(CatalogError::DuplicateName {
                    line,
                    name: name.to_string(),
                });
            }
            features.push(FeatureDef::new(name, category, pattern));
        }
        if features.is_empty() {
            return Err(CatalogError::Empty);
        }
        Ok(Self { features, index })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.features.len() * 48);
        out.push_str(HEADER);
        out.push('\n');
        for def in &self.features {
            out.push_str(&def.name);
            out.push(',');
            out.push_str(def.category.as_str());
            out.push(',');
            out.push_str(&def.pattern);
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        fs::write(path, self.to_csv())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn get(&self, index: usize) -> Option<&FeatureDef> {
        self.features.get(index)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|f| f.name.as_str())
    }

    pub fn count_in(&self, set: FeatureSetId) -> usize {
        self.features
            .iter()
            .filter(|f| set.contains(f.category))
            .count()
    }

    /// Indices of the features belonging to `set`, in catalog order.
    pub fn indices_of(&self, set: FeatureSetId) -> Vec<usize> {
        self.features
            .iter()
            .enumerate()
            .filter(|(_, f)| set.contains(f.category))
            .map(|(i, _)| i)
            .collect()
    }

    /// Sub-catalog for a feature set, preserving relative order.
    pub fn select(&self, set: FeatureSetId) -> FeatureCatalog {
        if set == FeatureSetId::Capf {
            return self.clone();
        }
        self.subset(&self.indices_of(set))
    }

    /// Sub-catalog of the given positions, in the order given.
    ///
    /// Panics if an index is out of range or repeated.
    pub fn subset(&self, indices: &[usize]) -> FeatureCatalog {
        let features = indices.iter().map(|&i| self.features[i].clone()).collect();
        FeatureCatalog::new(features).expect("subset of a valid catalog is valid")
    }

    /// Sub-catalog of the named features, in the order given.
    pub fn subset_by_names<S: AsRef<str>>(
        &self,
        names: &[S],
    ) -> Result<FeatureCatalog, CatalogError> {
        let indices = names
            .iter()
            .map(|n| {
                self.position(n.as_ref())
                    .ok_or_else(|| CatalogError::UnknownFeature(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.subset(&indices))
    }

    /// Order-sensitive digest of the feature names (first 64 bits of SHA-256,
    /// hex encoded). Two catalogs with the same names in the same order share
    /// a fingerprint.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for name in self.names() {
            hasher.update(name.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
