//! Class-conditional Bernoulli generator.
//!
//! Each feature bit is drawn independently with a per-class rate. An optional
//! XOR interaction ties two features to the label jointly while leaving each
//! marginally uninformative. Output order is the benign block followed by the
//! malware block.
//!
//! Spec files are CSV `name,p_benign,p_malware` with directive lines
//! `#n_benign=`, `#n_malware=`, optional `#background=` and
//! `#xor=nameA,nameB,q`. Other lines starting with `#` are comments. Catalog
//! features not listed take the background rate in both classes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng as _;

use super::{Dataset, FeatureVector, Label};
use crate::catalog::FeatureCatalog;
use crate::rng::rng_from_seed;

pub const DEFAULT_BACKGROUND_RATE: f64 = 0.05;

/// Shipped spec: the 20 most informative features at their observed class
/// rates over 3938 benign and 2925 malware apps, everything else at the
/// background rate. Resolved against the default catalog.
pub const CALIBRATED_SPEC: &str = include_str!("../../data/calibrated.spec");

#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    #[error("cannot read spec {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown feature `{name}`")]
    UnknownFeature { line: usize, name: String },
    #[error("line {line}: feature `{name}` listed twice")]
    DuplicateFeature { line: usize, name: String },
    #[error("missing directive #{0}=")]
    MissingDirective(&'static str),
    #[error("feature {index}: {which} rate {value} outside [0, 1]")]
    BadRate {
        index: usize,
        which: &'static str,
        value: f64,
    },
    #[error("spec has {found} feature rates, catalog has {expected}")]
    RateCount { expected: usize, found: usize },
    #[error("invalid xor interaction: {0}")]
    BadXor(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassRates {
    pub benign: f64,
    pub malware: f64,
}

impl ClassRates {
    pub fn new(benign: f64, malware: f64) -> Self {
        Self { benign, malware }
    }

    pub fn uniform(rate: f64) -> Self {
        Self::new(rate, rate)
    }

    pub fn for_label(&self, label: Label) -> f64 {
        match label {
            Label::Benign => self.benign,
            Label::Malware => self.malware,
        }
    }
}

/// Two features whose XOR agrees with "is malware" with probability
/// `strength`. Each bit on its own is a fair coin in both classes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XorInteraction {
    pub first: usize,
    pub second: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub rates: Vec<ClassRates>,
    pub n_benign: usize,
    pub n_malware: usize,
    pub xor: Option<XorInteraction>,
}

impl SyntheticSpec {
    pub fn uniform(n_features: usize, rate: f64, n_benign: usize, n_malware: usize) -> Self {
        Self {
            rates: vec![ClassRates::uniform(rate); n_features],
            n_benign,
            n_malware,
            xor: None,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<(), SpecError> {
        if self.rates.len() != n_features {
            return Err(SpecError::RateCount {
                expected: n_features,
                found: self.rates.len(),
            });
        }
        for (index, r) in self.rates.iter().enumerate() {
            for (which, value) in [("benign", r.benign), ("malware", r.malware)] {
                if !(0.0..=1.0).contains(&value) {
                    return Err(SpecError::BadRate {
                        index,
                        which,
                        value,
                    });
                }
            }
        }
        if let Some(x) = self.xor {
            if x.first == x.second {
                return Err(SpecError::BadXor("feature indices must differ".into()));
            }
            if x.first >= n_features || x.second >= n_features {
                return Err(SpecError::BadXor(format!(
                    "indices ({}, {}) out of range for {n_features} features",
                    x.first, x.second
                )));
            }
            if !(0.5..=1.0).contains(&x.strength) {
                return Err(SpecError::BadXor(format!(
                    "strength {} outside [0.5, 1]",
                    x.strength
                )));
            }
        }
        Ok(())
    }

    /// [`CALIBRATED_SPEC`] resolved against `catalog`.
    pub fn calibrated(catalog: &FeatureCatalog) -> Result<Self, SpecError> {
        Self::parse(CALIBRATED_SPEC, catalog)
    }

    pub fn load(path: impl AsRef<Path>, catalog: &FeatureCatalog) -> Result<Self, SpecError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| SpecError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, catalog)
    }

    pub fn parse(text: &str, catalog: &FeatureCatalog) -> Result<Self, SpecError> {
        let mut n_benign = None;
        let mut n_malware = None;
        let mut background = DEFAULT_BACKGROUND_RATE;
        let mut xor_line = None;
        let mut listed: Vec<Option<ClassRates>> = vec![None; catalog.len()];
        let mut seen_header = false;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let raw = raw.trim_end_matches('\r').trim();
            if raw.is_empty() {
                continue;
            }
            if let Some(body) = raw.strip_prefix('#') {
                let Some((key, value)) = body.split_once('=') else {
                    continue;
                };
                let key = key.trim();
                if !key.chars().all(|c| c.is_ascii_lowercase() || c == '_') {
                    continue;
                }
                let value = value.trim();
                match key {
                    "n_benign" => n_benign = Some(parse_count(value, line)?),
                    "n_malware" => n_malware = Some(parse_count(value, line)?),
                    "background" => background = parse_rate(value, line)?,
                    "xor" => xor_line = Some((line, value.to_string())),
                    other => {
                        return Err(SpecError::Syntax {
                            line,
                            message: format!("unknown directive `{other}`"),
                        })
                    }
                }
                continue;
            }
            if !seen_header {
                if raw != "name,p_benign,p_malware" {
                    return Err(SpecError::Syntax {
                        line,
                        message: "expected header `name,p_benign,p_malware`".into(),
                    });
                }
                seen_header = true;
                continue;
            }
            let fields: Vec<&str> = raw.split(',').collect();
            if fields.len() != 3 {
                return Err(SpecError::Syntax {
                    line,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let index = catalog
                .position(fields[0])
                .ok_or_else(|| SpecError::UnknownFeature {
                    line,
                    name: fields[0].to_string(),
                })?;
            if listed[index].is_some() {
                return Err(SpecError::DuplicateFeature {
                    line,
                    name: fields[0].to_string(),
                });
            }
            listed[index] = Some(ClassRates::new(
                parse_rate(fields[1], line)?,
                parse_rate(fields[2], line)?,
            ));
        }

        let xor = match xor_line {
            None => None,
            Some((line, value)) => {
                let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                if parts.len() != 3 {
                    return Err(SpecError::Syntax {
                        line,
                        message: "expected #xor=nameA,nameB,q".into(),
                    });
                }
                let lookup = |name: &str| {
                    catalog
                        .position(name)
                        .ok_or_else(|| SpecError::UnknownFeature {
                            line,
                            name: name.to_string(),
                        })
                };
                let strength = parts[2].parse::<f64>().map_err(|_| SpecError::Syntax {
                    line,
                    message: format!("bad xor strength `{}`", parts[2]),
                })?;
                Some(XorInteraction {
                    first: lookup(parts[0])?,
                    second: lookup(parts[1])?,
                    strength,
                })
            }
        };

        let spec = SyntheticSpec {
            rates: listed
                .into_iter()
                .map(|r| r.unwrap_or(ClassRates::uniform(background)))
                .collect(),
            n_benign: n_benign.ok_or(SpecError::MissingDirective("n_benign"))?,
            n_malware: n_malware.ok_or(SpecError::MissingDirective("n_malware"))?,
            xor,
        };
        spec.validate(catalog.len())?;
        Ok(spec)
    }

    /// Spec-file text listing every feature explicitly.
    pub fn to_spec_text(&self, catalog: &FeatureCatalog) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "#n_benign={}", self.n_benign);
        let _ = writeln!(out, "#n_malware={}", self.n_malware);
        if let Some(x) = self.xor {
            let name = |i: usize| &catalog.features()[i].name;
            let _ = writeln!(
                out,
                "#xor={},{},{}",
                name(x.first),
                name(x.second),
                x.strength
            );
        }
        out.push_str("name,p_benign,p_malware\n");
        for (def, r) in catalog.features().iter().zip(&self.rates) {
            let _ = writeln!(out, "{},{},{}", def.name, r.benign, r.malware);
        }
        out
    }
}

fn parse_count(value: &str, line: usize) -> Result<usize, SpecError> {
    value.parse().map_err(|_| SpecError::Syntax {
        line,
        message: format!("bad count `{value}`"),
    })
}

fn parse_rate(value: &str, line: usize) -> Result<f64, SpecError> {
    match value.trim().parse::<f64>() {
        Ok(v) if (0.0..=1.0).contains(&v) => Ok(v),
        _ => Err(SpecError::Syntax {
            line,
            message: format!("bad probability `{value}`"),
        }),
    }
}

/// Draws `n_benign + n_malware` instances. Pure function of `(spec, seed)`.
pub fn synthesize(
    catalog: impl Into<Arc<FeatureCatalog>>,
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<Dataset, SpecError> {
    let catalog = catalog.into();
    let n_features = catalog.len();
    spec.validate(n_features)?;

    let mut rng = rng_from_seed(seed);
    let total = spec.n_benign + spec.n_malware;
    let mut vectors = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let blocks = [
        (Label::Benign, spec.n_benign),
        (Label::Malware, spec.n_malware),
    ];

    for (label, count) in blocks {
        for _ in 0..count {
            let mut bits = vec![false; n_features];
            for (j, bit) in bits.iter_mut().enumerate() {
                if spec.xor.is_some_and(|x| x.first == j || x.second == j) {
                    continue;
                }
                *bit = rng.gen_bool(spec.rates[j].for_label(label));
            }
            if let Some(x) = spec.xor {
                let first = rng.gen_bool(0.5);
                let agrees = rng.gen_bool(x.strength);
                let parity = label.is_malware() == agrees;
                bits[x.first] = first;
                bits[x.second] = first ^ parity;
            }
            vectors.push(FeatureVector::new(bits));
            labels.push(label);
        }
    }
    Ok(Dataset::new(catalog, vectors, labels).expect("synthesized vectors match catalog"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{FeatureCategory, FeatureDef};

    fn catalog(n: usize) -> FeatureCatalog {
        FeatureCatalog::new(
            (0..n)
                .map(|i| FeatureDef::new(format!("f{i}"), FeatureCategory::Api, format!("p{i}")))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_rates_give_zero_vectors() {
        let spec = SyntheticSpec::uniform(5, 0.0, 10, 7);
        let d = synthesize(catalog(5), &spec, 1).unwrap();
        assert_eq!(d.class_counts(), (10, 7));
        assert!(d.vectors().iter().all(|v| v.count_ones() == 0));
        assert!(d.labels()[..10].iter().all(|&l| l == Label::Benign));
        assert!(d.labels()[10..].iter().all(|&l| l == Label::Malware));
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = SyntheticSpec::uniform(8, 0.3, 50, 50);
        let a = synthesize(catalog(8), &spec, 99).unwrap();
        let b = synthesize(catalog(8), &spec, 99).unwrap();
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        let c = synthesize(catalog(8), &spec, 100).unwrap();
        assert_ne!(a.to_csv_string(), c.to_csv_string());
    }

    #[test]
    fn strict_xor_determines_label() {
        let mut spec = SyntheticSpec::uniform(6, 0.5, 200, 200);
        spec.xor = Some(XorInteraction {
            first: 1,
            second: 4,
            strength: 1.0,
        });
        let d = synthesize(catalog(6), &spec, 5).unwrap();
        for (v, label) in d.instances() {
            assert_eq!(v.get(1) ^ v.get(4), label.is_malware());
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = SyntheticSpec::uniform(3, 0.5, 1, 1);
        spec.rates[2].malware = 1.5;
        assert!(matches!(
            synthesize(catalog(3), &spec, 0),
            Err(SpecError::BadRate { index: 2, .. })
        ));
        let mut spec = SyntheticSpec::uniform(3, 0.5, 1, 1);
        spec.xor = Some(XorInteraction {
            first: 0,
            second: 0,
            strength: 1.0,
        });
        assert!(matches!(
            synthesize(catalog(3), &spec, 0),
            Err(SpecError::BadXor(_))
        ));
        spec.xor = Some(XorInteraction {
            first: 0,
            second: 3,
            strength: 1.0,
        });
        assert!(matches!(
            synthesize(catalog(3), &spec, 0),
            Err(SpecError::BadXor(_))
        ));
        assert!(matches!(
            synthesize(catalog(4), &SyntheticSpec::uniform(3, 0.5, 1, 1), 0),
            Err(SpecError::RateCount { .. })
        ));
    }

    #[test]
    fn spec_file_parsing() {
        let cat = catalog(4);
        let text = "# comment line\n#n_benign=10\n#n_malware=20\n#background=0.1\n#xor=f0,f3,0.9\n\
                    name,p_benign,p_malware\nf1,0.2,0.7\n";
        let spec = SyntheticSpec::parse(text, &cat).unwrap();
        assert_eq!(spec.n_benign, 10);
        assert_eq!(spec.n_malware, 20);
        assert_eq!(spec.rates[1], ClassRates::new(0.2, 0.7));
        assert_eq!(spec.rates[2], ClassRates::uniform(0.1));
        assert_eq!(
            spec.xor,
            Some(XorInteraction {
                first: 0,
                second: 3,
                strength: 0.9
            })
        );
        let again = SyntheticSpec::parse(&spec.to_spec_text(&cat), &cat).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn spec_file_errors() {
        let cat = catalog(2);
        let missing = "#n_benign=1\nname,p_benign,p_malware\n";
        assert!(matches!(
            SyntheticSpec::parse(missing, &cat),
            Err(SpecError::MissingDirective("n_malware"))
        ));
        let unknown = "#n_benign=1\n#n_malware=1\nname,p_benign,p_malware\nzz,0.1,0.1\n";
        assert!(matches!(
            SyntheticSpec::parse(unknown, &cat),
            Err(SpecError::UnknownFeature { line: 4, .. })
        ));
        let bad = "#n_benign=1\n#n_malware=1\nname,p_benign,p_malware\nf0,0.1,1.1\n";
        assert!(matches!(
            SyntheticSpec::parse(bad, &cat),
            Err(SpecError::Syntax { line: 4, .. })
        ));
    }
}
