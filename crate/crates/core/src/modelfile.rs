//! Plain-text model files.
//!
//! ```text
//! droidtriage-model v1 <kind>
//! fingerprint <16 hex digits>
//! features <F>
//! <kind-specific body>
//! end
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a saved model
//! reloads bit-identical. Trees are written pre-order as `S <feature>` for a
//! split (absent branch first) and `L <benign> <malware>` for a leaf.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bayes::NbModel;
use crate::catalog::FeatureCatalog;
use crate::ensemble::{ForestModel, ForestParams, LogitModel, SimpleRegressor};
use crate::error::TrainError;
use crate::model::{Classifier, Model};
use crate::trees::{ClassDistribution, SplitCriterion, TreeModel, TreeNode, TreeParams};

pub const MAGIC: &str = "droidtriage-model";
pub const VERSION: &str = "v1";

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("cannot access model file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("model file line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("model file line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: TrainError,
    },
    #[error("model was trained on catalog {model} but the current catalog is {catalog}")]
    FingerprintMismatch { model: String, catalog: String },
}

/// A model together with the catalog fingerprint it was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub fingerprint: String,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, catalog: &FeatureCatalog) -> Self {
        Self {
            fingerprint: catalog.fingerprint(),
            model,
        }
    }

    /// Fails unless `catalog` has the fingerprint recorded in the file.
    pub fn check_catalog(&self, catalog: &FeatureCatalog) -> Result<(), ModelFileError> {
        let current = catalog.fingerprint();
        if current != self.fingerprint {
            return Err(ModelFileError::FingerprintMismatch {
                model: self.fingerprint.clone(),
                catalog: current,
            });
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let m = &self.model;
        let _ = writeln!(out, "{MAGIC} {VERSION} {}", m.kind());
        let _ = writeln!(out, "fingerprint {}", self.fingerprint);
        let _ = writeln!(out, "features {}", m.n_features());
        match m {
            Model::NaiveBayes(nb) => write_nb(&mut out, nb),
            Model::DecisionTree(t) | Model::RandomTree(t) => write_tree(&mut out, t),
            Model::RandomForest(f) => {
                let p = f.params();
                let _ = writeln!(
                    out,
                    "forest {} {} {} {} {}",
                    p.trees,
                    p.features_per_split,
                    u8::from(p.bootstrap),
                    p.bootstrap_fraction,
                    p.seed
                );
                for t in f.trees() {
                    write_tree(&mut out, t);
                }
            }
            Model::SimpleLogistic(l) => {
                let _ = writeln!(out, "logit {} {}", l.max_iterations(), l.cv_folds());
                let _ = writeln!(out, "intercept {}", l.intercept());
                let _ = writeln!(out, "regressors {}", l.regressors().len());
                for r in l.regressors() {
                    let _ = writeln!(out, "r {} {} {}", r.feature, r.if_absent, r.if_present);
                }
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn parse(text: &str) -> Result<Self, ModelFileError> {
        let mut lines = Lines::new(text);
        let (line, header) = lines.next_fields()?;
        let kind = match header.as_slice() {
            [magic, version, kind] if *magic == MAGIC => {
                if *version != VERSION {
                    return Err(syntax(
                        line,
                        format!("unsupported format version `{version}`"),
                    ));
                }
                *kind
            }
            _ => {
                return Err(syntax(
                    line,
                    format!("expected `{MAGIC} {VERSION} <kind>` header"),
                ))
            }
        };
        let fingerprint = lines.keyed("fingerprint", 1)?.1[0].to_string();
        if fingerprint.len() != 16 || !fingerprint.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(syntax(
                lines.line,
                format!("malformed fingerprint `{fingerprint}`"),
            ));
        }
        let (line, f) = lines.keyed("features", 1)?;
        let n_features: usize = parse_field(line, f[0])?;

        let model = match kind {
            "nb" => Model::NaiveBayes(read_nb(&mut lines, n_features)?),
            "dt" => Model::DecisionTree(read_tree(&mut lines, n_features)?),
            "rt" => Model::RandomTree(read_tree(&mut lines, n_features)?),
            "rf" => {
                let (line, f) = lines.keyed("forest", 5)?;
                let params = ForestParams {
                    trees: parse_field(line, f[0])?,
                    features_per_split: parse_field(line, f[1])?,
                    bootstrap: parse_flag(line, f[2])?,
                    bootstrap_fraction: parse_field(line, f[3])?,
                    seed: parse_field(line, f[4])?,
                };
                let trees = (0..params.trees)
                    .map(|_| read_tree(&mut lines, n_features))
                    .collect::<Result<Vec<_>, _>>()?;
                Model::RandomForest(
                    ForestModel::from_parts(trees, params, n_features).map_err(invalid(line))?,
                )
            }
            "sl" => {
                let (line, f) = lines.keyed("logit", 2)?;
                let max_iterations = parse_field(line, f[0])?;
                let cv_folds = parse_field(line, f[1])?;
                let (line, f) = lines.keyed("intercept", 1)?;
                let intercept: f64 = parse_field(line, f[0])?;
                let (line, f) = lines.keyed("regressors", 1)?;
                let count: usize = parse_field(line, f[0])?;
                let mut regressors = Vec::new();
                for _ in 0..count {
                    let (line, f) = lines.keyed("r", 3)?;
                    regressors.push(SimpleRegressor {
                        feature: parse_field(line, f[0])?,
                        if_absent: parse_field(line, f[1])?,
                        if_present: parse_field(line, f[2])?,
                    });
                }
                Model::SimpleLogistic(
                    LogitModel::from_parts(
                        intercept,
                        regressors,
                        max_iterations,
                        cv_folds,
                        n_features,
                    )
                    .map_err(invalid(line))?,
                )
            }
            other => return Err(syntax(1, format!("unknown model kind `{other}`"))),
        };
        lines.keyed("end", 0)?;
        if let Some((line, _)) = lines.peek_fields() {
            return Err(syntax(line, "content after `end`".into()));
        }
        Ok(Self { fingerprint, model })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelFileError> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|source| ModelFileError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelFileError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ModelFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }
}

pub fn save_model(
    model: &Model,
    catalog: &FeatureCatalog,
    path: impl AsRef<Path>,
) -> Result<(), ModelFileError> {
    ModelFile::new(model.clone(), catalog).save(path)
}

/// Loads a model and checks it was trained under `catalog`.
pub fn load_model(
    path: impl AsRef<Path>,
    catalog: &FeatureCatalog,
) -> Result<Model, ModelFileError> {
    let file = ModelFile::load(path)?;
    file.check_catalog(catalog)?;
    Ok(file.model)
}

fn write_nb(out: &mut String, nb: &NbModel) {
    let _ = writeln!(out, "alpha {}", nb.alpha());
    let _ = writeln!(out, "prior {}", nb.prior_malware());
    for (b, m) in nb.theta_benign().iter().zip(nb.theta_malware()) {
        let _ = writeln!(out, "theta {b} {m}");
    }
}

fn read_nb(lines: &mut Lines<'_>, n_features: usize) -> Result<NbModel, ModelFileError> {
    let (_, f) = lines.keyed("alpha", 1)?;
    let alpha = parse_field(lines.line, f[0])?;
    let (line, f) = lines.keyed("prior", 1)?;
    let prior = parse_field(line, f[0])?;
    let mut tb = Vec::with_capacity(n_features);
    let mut tm = Vec::with_capacity(n_features);
    for _ in 0..n_features {
        let (line, f) = lines.keyed("theta", 2)?;
        tb.push(parse_field(line, f[0])?);
        tm.push(parse_field(line, f[1])?);
    }
    NbModel::from_parameters(alpha, prior, tb, tm).map_err(invalid(line))
}

fn write_tree(out: &mut String, t: &TreeModel) {
    let p = t.params();
    let _ = writeln!(
        out,
        "tree {} {} {} {} {}",
        p.criterion,
        u8::from(p.prune),
        p.features_per_split,
        p.seed,
        t.node_count()
    );
    fn walk(out: &mut String, node: &TreeNode) {
        match node {
            TreeNode::Leaf(d) => {
                let _ = writeln!(out, "L {} {}", d.benign, d.malware);
            }
            TreeNode::Split {
                feature,
                absent,
                present,
            } => {
                let _ = writeln!(out, "S {feature}");
                walk(out, absent);
                walk(out, present);
            }
        }
    }
    walk(out, t.root());
}

fn read_tree(lines: &mut Lines<'_>, n_features: usize) -> Result<TreeModel, ModelFileError> {
    let (line, f) = lines.keyed("tree", 5)?;
    let criterion = SplitCriterion::from_str(f[0]).map_err(|m| syntax(line, m))?;
    let params = TreeParams {
        criterion,
        prune: parse_flag(line, f[1])?,
        features_per_split: parse_field(line, f[2])?,
        seed: parse_field(line, f[3])?,
    };
    let nodes: usize = parse_field(line, f[4])?;
    let mut remaining = nodes;
    let root = read_node(lines, &mut remaining)?;
    if remaining != 0 {
        return Err(syntax(
            line,
            format!(
                "tree declares {nodes} nodes but holds {}",
                nodes - remaining
            ),
        ));
    }
    TreeModel::from_parts(root, params, n_features).map_err(invalid(line))
}

fn read_node(lines: &mut Lines<'_>, remaining: &mut usize) -> Result<TreeNode, ModelFileError> {
    let (line, f) = lines.next_fields()?;
    if *remaining == 0 {
        return Err(syntax(line, "more tree nodes than declared".into()));
    }
    *remaining -= 1;
    match f.as_slice() {
        ["L", b, m] => Ok(TreeNode::Leaf(ClassDistribution::new(
            parse_field(line, b)?,
            parse_field(line, m)?,
        ))),
        ["S", feature] => {
            let feature = parse_field(line, feature)?;
            let absent = Box::new(read_node(lines, remaining)?);
            let present = Box::new(read_node(lines, remaining)?);
            Ok(TreeNode::Split {
                feature,
                absent,
                present,
            })
        }
        _ => Err(syntax(
            line,
            "expected `S <feature>` or `L <benign> <malware>`".into(),
        )),
    }
}

fn syntax(line: usize, message: String) -> ModelFileError {
    ModelFileError::Syntax { line, message }
}

fn invalid(line: usize) -> impl Fn(TrainError) -> ModelFileError {
    move |source| ModelFileError::Invalid { line, source }
}

fn parse_field<T: FromStr>(line: usize, field: &str) -> Result<T, ModelFileError> {
    field
        .parse()
        .map_err(|_| syntax(line, format!("cannot parse `{field}`")))
}

fn parse_flag(line: usize, field: &str) -> Result<bool, ModelFileError> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(syntax(line, format!("expected 0 or 1, found `{field}`"))),
    }
}

/// Whitespace-split lines with 1-based numbering.
struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate().peekable(),
            line: 0,
        }
    }

    fn next_fields(&mut self) -> Result<(usize, Vec<&'a str>), ModelFileError> {
        match self.inner.next() {
            Some((i, text)) => {
                self.line = i + 1;
                Ok((self.line, text.split_whitespace().collect()))
            }
            None => Err(syntax(self.line + 1, "unexpected end of file".into())),
        }
    }

    fn peek_fields(&mut self) -> Option<(usize, Vec<&'a str>)> {
        self.inner
            .peek()
            .map(|&(i, text)| (i + 1, text.split_whitespace().collect()))
    }

    /// Next line, which must be `key` followed by exactly `arity` fields.
    fn keyed(&mut self, key: &str, arity: usize) -> Result<(usize, Vec<&'a str>), ModelFileError> {
        let (line, mut fields) = self.next_fields()?;
        if fields.first() != Some(&key) || fields.len() != arity + 1 {
            return Err(syntax(
                line,
                format!("expected `{key}` with {arity} value(s)"),
            ));
        }
        fields.remove(0);
        Ok((line, fields))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_catalog() -> FeatureCatalog {
        FeatureCatalog::parse("name,category,pattern\na,PERMISSION,p.a\nb,API,b\n").unwrap()
    }

    #[test]
    fn tree_round_trip_is_exact() {
        let root = TreeNode::Split {
            feature: 1,
            absent: Box::new(TreeNode::Leaf(ClassDistribution::new(5, 1))),
            present: Box::new(TreeNode::Leaf(ClassDistribution::new(0, 7))),
        };
        let params = TreeParams {
            criterion: SplitCriterion::Gini,
            prune: false,
            features_per_split: 0,
            seed: 9,
        };
        let model = Model::DecisionTree(TreeModel::from_parts(root, params, 2).unwrap());
        let file = ModelFile::new(model, &tiny_catalog());
        let text = file.to_text();
        assert!(text.starts_with("droidtriage-model v1 dt\n"));
        assert_eq!(ModelFile::parse(&text).unwrap(), file);
    }

    #[test]
    fn nb_floats_survive() {
        let nb =
            NbModel::from_parameters(1.0, 0.1 + 0.2, vec![1.0 / 3.0, 0.7], vec![1e-9, 0.999_999])
                .unwrap();
        let file = ModelFile::new(Model::NaiveBayes(nb), &tiny_catalog());
        assert_eq!(ModelFile::parse(&file.to_text()).unwrap(), file);
    }

    #[test]
    fn fingerprint_mismatch_names_both() {
        let file = ModelFile::new(Model::SimpleLogistic(LogitModel::empty(2)), &tiny_catalog());
        let other =
            FeatureCatalog::parse("name,category,pattern\nb,API,b\na,PERMISSION,p.a\n").unwrap();
        let err = file.check_catalog(&other).unwrap_err().to_string();
        assert!(err.contains(&tiny_catalog().fingerprint()));
        assert!(err.contains(&other.fingerprint()));
    }

    #[test]
    fn malformed_files() {
        let good =
            ModelFile::new(Model::SimpleLogistic(LogitModel::empty(2)), &tiny_catalog()).to_text();
        assert!(ModelFile::parse(&good).is_ok());
        let bad_kind = good.replacen(" sl\n", " svm\n", 1);
        assert!(matches!(
            ModelFile::parse(&bad_kind),
            Err(ModelFileError::Syntax { line: 1, .. })
        ));
        let truncated = good.replace("end\n", "");
        assert!(ModelFile::parse(&truncated).is_err());
        let trailing = format!("{good}extra\n");
        assert!(ModelFile::parse(&trailing).is_err());
        let bad_version = good.replacen("v1", "v9", 1);
        assert!(ModelFile::parse(&bad_version).is_err());
    }
}
