//! Feature scanner for unpacked application trees.
//!
//! Permission features are matched as whole tokens in `AndroidManifest.xml`.
//! API and command features are matched as raw, case-sensitive byte
//! substrings in every other regular file under the root, binary or not.

use std::fs;
use std::path::{Path, PathBuf};

use memchr::memmem;
use walkdir::WalkDir;

use crate::catalog::{FeatureCatalog, FeatureCategory};
use crate::dataset::FeatureVector;
use crate::par;

pub const MANIFEST_NAME: &str = "AndroidManifest.xml";

#[derive(Debug, thiserror::Error)]
pub enum ExtractError {
    #[error("cannot read application root {path}: {source}")]
    Root {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("application root {0} is not a directory")]
    NotADirectory(PathBuf),
}

/// Result of scanning one application tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanReport {
    pub vector: FeatureVector,
    /// Non-fatal problems: missing manifest, unreadable files.
    pub warnings: Vec<String>,
}

pub fn scan_app(
    root: impl AsRef<Path>,
    catalog: &FeatureCatalog,
) -> Result<ScanReport, ExtractError> {
    let root = root.as_ref();
    let meta = fs::metadata(root).map_err(|source| ExtractError::Root {
        path: root.to_path_buf(),
        source,
    })?;
    if !meta.is_dir() {
        return Err(ExtractError::NotADirectory(root.to_path_buf()));
    }
    fs::read_dir(root).map_err(|source| ExtractError::Root {
        path: root.to_path_buf(),
        source,
    })?;

    let mut warnings = Vec::new();
    let mut bits = vec![false; catalog.len()];
    let manifest_path = root.join(MANIFEST_NAME);

    let permissions: Vec<(usize, &str)> =
        pattern_indices(catalog, |c| c == FeatureCategory::Permission);
    match fs::read(&manifest_path) {
        Ok(manifest) => {
            for &(i, pattern) in &permissions {
                bits[i] = contains_token(&manifest, pattern.as_bytes());
            }
        }
        Err(err) => warnings.push(format!(
            "{}: manifest unavailable ({err}); permission features left at 0",
            manifest_path.display()
        )),
    }

    let code_patterns: Vec<(usize, memmem::Finder<'_>)> =
        pattern_indices(catalog, |c| c != FeatureCategory::Permission)
            .into_iter()
            .map(|(i, p)| (i, memmem::Finder::new(p.as_bytes())))
            .collect();

    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        match entry {
            Ok(e) if e.file_type().is_file() && e.path() != manifest_path => {
                files.push(e.into_path())
            }
            Ok(_) => {}
            Err(err) => warnings.push(format!("skipping unreadable entry: {err}")),
        }
    }

    let per_file = par::map_slice(&files, |path| match fs::read(path) {
        Ok(bytes) => Ok(code_patterns
            .iter()
            .filter(|(_, finder)| finder.find(&bytes).is_some())
            .map(|&(i, _)| i)
            .collect::<Vec<_>>()),
        Err(err) => Err(format!("{}: unreadable ({err}); skipped", path.display())),
    });
    for hits in per_file {
        match hits {
            Ok(hits) => hits.into_iter().for_each(|i| bits[i] = true),
            Err(warning) => warnings.push(warning),
        }
    }

    Ok(ScanReport {
        vector: FeatureVector::new(bits),
        warnings,
    })
}

fn pattern_indices(
    catalog: &FeatureCatalog,
    keep: impl Fn(FeatureCategory) -> bool,
) -> Vec<(usize, &str)> {
    catalog
        .features()
        .iter()
        .enumerate()
        .filter(|(_, f)| keep(f.category))
        .map(|(i, f)| (i, f.pattern.as_str()))
        .collect()
}

fn is_identifier_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'.'
}

/// True if `needle` occurs in `haystack` with no identifier character
/// (alphanumeric, `_` or `.`) directly before or after it.
fn contains_token(haystack: &[u8], needle: &[u8]) -> bool {
    memmem::find_iter(haystack, needle).any(|start| {
        let end = start + needle.len();
        let before_ok = start == 0 || !is_identifier_byte(haystack[start - 1]);
        let after_ok = end == haystack.len() || !is_identifier_byte(haystack[end]);
        before_ok && after_ok
    })
}
