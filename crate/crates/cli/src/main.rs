use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::builder::TypedValueParser as _;
use clap::{Args, Parser, Subcommand};

use droidtriage_core::catalog::{FeatureCatalog, FeatureSetId};
use droidtriage_core::dataset::{synthesize, Dataset, Label, SyntheticSpec, VectorTable};
use droidtriage_core::ensemble::{DEFAULT_CV_FOLDS, DEFAULT_MAX_ITERATIONS, DEFAULT_TREES};
use droidtriage_core::eval::{compare, cross_validate, roc_auc, ComparisonRow, ComparisonTable};
use droidtriage_core::extract::scan_app;
use droidtriage_core::model::{AlgoDescriptor, Classifier};
use droidtriage_core::modelfile::{load_model, save_model};
use droidtriage_core::ranking::rank_features;
use droidtriage_core::trees::SplitCriterion;
use droidtriage_core::Error;

const DEFAULT_FOLDS: usize = 10;

#[derive(Parser, Debug)]
#[command(
    name = "droidtriage",
    version,
    about = "Static-feature Android malware classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic labelled dataset.
    Synth {
        /// Spec file; the shipped calibrated spec when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        io: CatalogOut,
    },
    /// Rank features by mutual information with the class.
    Rank {
        #[arg(long)]
        data: PathBuf,
        /// Keep only the first N rows of the ranking.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        top: Option<u64>,
        #[command(flatten)]
        io: CatalogOut,
    },
    /// Train a model and save it.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        algo: AlgoArgs,
        #[arg(long, value_parser = parse_feature_set)]
        feature_set: Option<FeatureSetId>,
        #[arg(long)]
        catalog: Option<PathBuf>,
    },
    /// Score vectors with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_parser = parse_feature_set)]
        feature_set: Option<FeatureSetId>,
        #[command(flatten)]
        io: CatalogOut,
    },
    /// Stratified k-fold cross-validation of one algorithm.
    Crossval {
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        algo: AlgoArgs,
        #[arg(long, default_value_t = DEFAULT_FOLDS)]
        folds: usize,
        #[arg(long, value_parser = parse_feature_set)]
        feature_set: Option<FeatureSetId>,
        #[command(flatten)]
        io: CatalogOut,
    },
    /// Cross-validate several algorithms on several feature sets.
    Compare {
        #[arg(long)]
        data: PathBuf,
        /// Comma-separated kinds; all five when omitted.
        #[arg(long = "algo", value_delimiter = ',')]
        algos: Vec<String>,
        /// Comma-separated feature sets, or `all`; CAPF when omitted.
        #[arg(long = "feature-set", value_delimiter = ',')]
        feature_sets: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_FOLDS)]
        folds: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        io: CatalogOut,
    },
    /// ROC curve of a saved model on labelled data.
    Roc {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Also write an SVG plot here.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long, value_parser = parse_feature_set)]
        feature_set: Option<FeatureSetId>,
        #[command(flatten)]
        io: CatalogOut,
    },
    /// Scan unpacked application directories into feature vectors.
    Extract {
        /// Application root directories, one output row each.
        #[arg(required = true)]
        apps: Vec<PathBuf>,
        /// Label every row with this class.
        #[arg(long, value_parser = parse_label)]
        label: Option<Label>,
        #[command(flatten)]
        io: CatalogOut,
    },
    /// Print the feature catalog and its fingerprint.
    Catalog {
        #[command(flatten)]
        io: CatalogOut,
    },
}

#[derive(Args, Debug)]
struct CatalogOut {
    /// Catalog CSV; the built-in 179-feature catalog when omitted.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AlgoArgs {
    /// One of nb, dt, rt, rf, sl.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(AlgoDescriptor::KINDS))]
    algo: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of trees (rf).
    #[arg(long, default_value_t = DEFAULT_TREES, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    trees: usize,
    /// Random features per split (rt, rf); floor(log2 F) + 1 when omitted.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..).map(|v| v as usize))]
    k: Option<usize>,
    /// Bootstrap sample size as a fraction of N, or `off` (rf).
    #[arg(long, default_value = "1.0", value_parser = parse_bootstrap)]
    bootstrap: Bootstrap,
    /// Laplace smoothing (nb).
    #[arg(long, default_value_t = droidtriage_core::bayes::DEFAULT_ALPHA)]
    alpha: f64,
    /// Reduced-error pruning (dt).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    prune: bool,
    /// entropy or gini (dt).
    #[arg(long, default_value = "entropy")]
    criterion: SplitCriterion,
    /// Boosting iteration cap (sl).
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
    /// Folds used to pick the iteration count (sl).
    #[arg(long, default_value_t = DEFAULT_CV_FOLDS)]
    cv_folds: usize,
}

#[derive(Debug, Clone, Copy)]
struct Bootstrap(Option<f64>);

fn parse_bootstrap(s: &str) -> Result<Bootstrap, String> {
    if s.eq_ignore_ascii_case("off") {
        return Ok(Bootstrap(None));
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected a fraction in (0, 1] or `off`, got `{s}`"))?;
    if !(v > 0.0 && v <= 1.0) {
        return Err(format!("bootstrap fraction {v} outside (0, 1]"));
    }
    Ok(Bootstrap(Some(v)))
}

fn parse_feature_set(s: &str) -> Result<FeatureSetId, String> {
    s.parse()
}

fn parse_label(s: &str) -> Result<Label, String> {
    s.parse()
        .map_err(|_| format!("expected benign or malware, got `{s}`"))
}

impl AlgoArgs {
    fn descriptor(&self) -> AlgoDescriptor {
        match self.algo.as_str() {
            "nb" => AlgoDescriptor::NaiveBayes { alpha: self.alpha },
            "dt" => AlgoDescriptor::DecisionTree {
                criterion: self.criterion,
                prune: self.prune,
                seed: self.seed,
            },
            "rt" => AlgoDescriptor::RandomTree {
                features_per_split: self.k,
                seed: self.seed,
            },
            "rf" => AlgoDescriptor::RandomForest {
                trees: self.trees,
                features_per_split: self.k,
                bootstrap_fraction: self.bootstrap.0,
                seed: self.seed,
            },
            "sl" => AlgoDescriptor::SimpleLogistic {
                max_iterations: self.max_iter,
                cv_folds: self.cv_folds,
                seed: self.seed,
            },
            other => unreachable!("clap restricts --algo, got {other}"),
        }
    }
}

/// Failure of a parsed command.
#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Data(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

fn data_err(e: impl Into<Error>) -> CliError {
    CliError::Data(e.into())
}

fn load_catalog(path: Option<&Path>) -> Result<Arc<FeatureCatalog>, CliError> {
    Ok(Arc::new(match path {
        Some(p) => FeatureCatalog::load(p).map_err(data_err)?,
        None => FeatureCatalog::default_catalog(),
    }))
}

/// Writes `text` to `out`, or to stdout when `out` is `None`.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        }),
        None => io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Write {
                path: "stdout".into(),
                source,
            }),
    }
}

/// Reads a labelled dataset, restricted to `set` when given.
fn load_dataset(
    path: &Path,
    catalog: Arc<FeatureCatalog>,
    set: Option<FeatureSetId>,
) -> Result<Dataset, CliError> {
    let d = Dataset::read_csv(path, catalog).map_err(data_err)?;
    Ok(match set {
        Some(set) => d.select_features(set),
        None => d,
    })
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth { spec, seed, io } => {
            let catalog = load_catalog(io.catalog.as_deref())?;
            let spec = match spec {
                Some(path) => SyntheticSpec::load(path, &catalog),
                None => SyntheticSpec::calibrated(&catalog),
            }
            .map_err(data_err)?;
            let d = synthesize(catalog, &spec, seed).map_err(data_err)?;
            emit(io.out.as_deref(), &d.to_csv_string())
        }
        Command::Rank { data, top, io } => {
            let catalog = load_catalog(io.catalog.as_deref())?;
            let d = load_dataset(&data, catalog, None)?;
            let ranking = rank_features(&d).map_err(data_err)?;
            if let Some(top) = top {
                ranking.top_k(top as usize).map_err(data_err)?;
            }
            emit(io.out.as_deref(), &ranking.to_csv(top.map(|t| t as usize)))
        }
        Command::Train {
            data,
            model,
            algo,
            feature_set,
            catalog,
        } => {
            let catalog = load_catalog(catalog.as_deref())?;
            let d = load_dataset(&data, catalog, feature_set)?;
            let trained = algo.descriptor().train(&d).map_err(data_err)?;
            save_model(&trained, d.catalog(), &model).map_err(data_err)?;
            eprintln!(
                "trained {} on {} rows x {} features (catalog {})",
                trained.kind(),
                d.len(),
                d.n_features(),
                d.catalog().fingerprint()
            );
            println!("{}", model.display());
            Ok(())
        }
        Command::Predict {
            model,
            data,
            feature_set,
            io,
        } => {
            let full = load_catalog(io.catalog.as_deref())?;
            let table = VectorTable::read_csv(&data, &full).map_err(data_err)?;
            let (catalog, columns) = match feature_set {
                Some(set) => (full.select(set), Some(full.indices_of(set))),
                None => ((*full).clone(), None),
            };
            let m = load_model(&model, &catalog).map_err(data_err)?;
            let mut out = String::from("row,label,score\n");
            for (i, v) in table.vectors.iter().enumerate() {
                let v = match &columns {
                    Some(cols) => v.project(cols),
                    None => v.clone(),
                };
                let p = m.predict(&v).map_err(data_err)?;
                let _ = writeln!(out, "{},{},{}", i + 1, p.label, p.score);
            }
            emit(io.out.as_deref(), &out)
        }
        Command::Crossval {
            data,
            algo,
            folds,
            feature_set,
            io,
        } => {
            let catalog = load_catalog(io.catalog.as_deref())?;
            let set = feature_set.unwrap_or(FeatureSetId::Capf);
            let d = load_dataset(&data, catalog, Some(set))?;
            let result =
                cross_validate(&d, &algo.descriptor(), folds, algo.seed).map_err(data_err)?;
            let table = ComparisonTable {
                rows: vec![ComparisonRow::from_cv(&result, set, d.n_features())],
            };
            emit(io.out.as_deref(), &table.to_csv())
        }
        Command::Compare {
            data,
            algos,
            feature_sets,
            folds,
            seed,
            io,
        } => {
            let catalog = load_catalog(io.catalog.as_deref())?;
            let d = load_dataset(&data, catalog, None)?;
            let kinds: Vec<&str> = if algos.is_empty() {
                AlgoDescriptor::KINDS.to_vec()
            } else {
                algos.iter().map(String::as_str).collect()
            };
            let descriptors = kinds
                .iter()
                .map(|k| {
                    AlgoDescriptor::default_for(k, seed).ok_or_else(|| {
                        CliError::Usage(format!(
                            "unknown algorithm `{k}` (expected nb, dt, rt, rf or sl)"
                        ))
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let sets = parse_feature_sets(&feature_sets)?;
            let table = compare(&d, &descriptors, &sets, folds, seed).map_err(data_err)?;
            emit(io.out.as_deref(), &table.to_csv())
        }
        Command::Roc {
            model,
            data,
            svg,
            feature_set,
            io,
        } => {
            let catalog = load_catalog(io.catalog.as_deref())?;
            let d = load_dataset(&data, catalog, feature_set)?;
            let m = load_model(&model, d.catalog()).map_err(data_err)?;
            let scores: Vec<f64> = m
                .predict_all(d.vectors())
                .map_err(data_err)?
                .iter()
                .map(|p| p.score)
                .collect();
            let roc = roc_auc(&scores, d.labels()).map_err(data_err)?;
            eprintln!("AUC {:.6}", roc.auc);
            if let Some(path) = svg {
                let title = format!("ROC: {}", m.kind());
                emit(Some(&path), &roc.to_svg(&title))?;
            }
            emit(io.out.as_deref(), &roc.to_csv())
        }
        Command::Extract { apps, label, io } => {
            let catalog = load_catalog(io.catalog.as_deref())?;
            let mut vectors = Vec::with_capacity(apps.len());
            for app in &apps {
                let report = scan_app(app, &catalog).map_err(data_err)?;
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
                vectors.push(report.vector);
            }
            let table = VectorTable {
                labels: label.map(|l| vec![l; vectors.len()]),
                vectors,
            };
            let mut buf = Vec::new();
            table
                .write_to(&mut buf, &catalog)
                .expect("writing to memory");
            emit(
                io.out.as_deref(),
                &String::from_utf8(buf).expect("CSV is UTF-8"),
            )
        }
        Command::Catalog { io } => {
            let catalog = load_catalog(io.catalog.as_deref())?;
            eprintln!(
                "{} features ({} PF, {} AF), fingerprint {}",
                catalog.len(),
                catalog.count_in(FeatureSetId::Pf),
                catalog.count_in(FeatureSetId::Af),
                catalog.fingerprint()
            );
            emit(io.out.as_deref(), &catalog.to_csv())
        }
    }
}

fn parse_feature_sets(raw: &[String]) -> Result<Vec<FeatureSetId>, CliError> {
    if raw.is_empty() {
        return Ok(vec![FeatureSetId::Capf]);
    }
    let mut sets = Vec::new();
    for s in raw {
        if s.eq_ignore_ascii_case("all") {
            sets.extend(FeatureSetId::ALL);
        } else {
            sets.push(s.parse().map_err(CliError::Usage)?);
        }
    }
    Ok(sets)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
