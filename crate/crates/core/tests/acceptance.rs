//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line to stdout
//! (bypassing the harness capture) and then asserts.

use std::io::Write as _;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use rand::Rng as _;

use droidtriage_core::catalog::{FeatureCatalog, FeatureCategory, FeatureDef, FeatureSetId};
use droidtriage_core::dataset::{
    synthesize, Dataset, FeatureVector, Label, SyntheticSpec, XorInteraction,
};
use droidtriage_core::ensemble::{
    log_likelihood, logitboost_response, train_forest, train_simple_logistic, tree_seed,
    ForestParams, Z_MAX,
};
use droidtriage_core::eval::{cross_validate, mann_whitney_auc, metrics, roc_auc, ConfusionMatrix};
use droidtriage_core::model::{default_features_per_split, AlgoDescriptor, Classifier, Model};
use droidtriage_core::modelfile::ModelFile;
use droidtriage_core::par::with_workers;
use droidtriage_core::ranking::{mutual_information, rank_features, FeatureClassCounts};
use droidtriage_core::rng::rng_from_seed;
use droidtriage_core::trees::{train_decision_tree, train_random_tree, SplitCriterion, TreeNode};

const N_BENIGN: u64 = 3938;
const N_MALWARE: u64 = 2925;

/// (name, benign count, malware count, published score)
const TOP20: [(&str, u64, u64, f64); 20] = [
    ("SEND_SMS", 128, 1557, 0.260525),
    ("RECEIVE_SMS", 127, 976, 0.126554),
    ("READ_SMS", 140, 900, 0.107046),
    ("remount", 30, 628, 0.098938),
    ("/system/app", 55, 687, 0.098179),
    ("chown", 51, 668, 0.096293),
    ("createSubprocess", 5, 531, 0.096111),
    ("WRITE_SMS", 89, 720, 0.090689),
    ("/system/bin/sh", 36, 596, 0.089475),
    ("mount", 146, 810, 0.088369),
    ("abortBroadcast", 48, 618, 0.08799),
    ("READ_PHONE_STATE", 2016, 2378, 0.072633),
    ("TelephonyManager", 2168, 2451, 0.069811),
    ("TelephonyManager _getSubscriberId", 480, 1094, 0.063550),
    ("chmod", 459, 999, 0.053325),
    ("Ljava_net_URLDecoder", 1539, 445, 0.051456),
    ("ACCESS_NETWORK_STATE", 2973, 1453, 0.051394),
    ("RESTART_PACKAGES", 142, 597, 0.050407),
    ("CHANGE_WIFI_STATE", 297, 756, 0.048716),
    ("Ljavax_crypto_spec_SecretKeySpec", 1719, 592, 0.044834),
];

fn report(criterion: u32, pass: bool, elapsed: Duration, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{verdict} criterion {criterion:>2} [{:.2}s]: {detail}",
        elapsed.as_secs_f64()
    );
}

fn calibrated_dataset(seed: u64) -> Dataset {
    let catalog = Arc::new(FeatureCatalog::default_catalog());
    let spec = SyntheticSpec::calibrated(&catalog).unwrap();
    synthesize(catalog, &spec, seed).unwrap()
}

/// Every top-20 feature present in exactly its tabulated number of rows per
/// class; all other catalog features absent.
fn exact_count_dataset() -> Dataset {
    let catalog = Arc::new(FeatureCatalog::default_catalog());
    let columns: Vec<(usize, u64, u64)> = TOP20
        .iter()
        .map(|&(name, b, m, _)| {
            (
                catalog.position(name).expect("top-20 feature in catalog"),
                b,
                m,
            )
        })
        .collect();
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (label, n) in [(Label::Benign, N_BENIGN), (Label::Malware, N_MALWARE)] {
        for row in 0..n {
            let mut v = FeatureVector::zeros(catalog.len());
            for &(j, b, m) in &columns {
                let count = if label.is_malware() { m } else { b };
                v.set(j, row < count);
            }
            vectors.push(v);
            labels.push(label);
        }
    }
    Dataset::new(catalog, vectors, labels).unwrap()
}

#[test]
fn criterion_01_top20_mutual_information() {
    let start = Instant::now();
    let mut misses = Vec::new();
    let mut worst: f64 = 0.0;
    for &(name, b, m, published) in &TOP20 {
        let mi = mutual_information(&FeatureClassCounts::new(b, m, N_BENIGN, N_MALWARE)).unwrap();
        let diff = (mi - published).abs();
        worst = worst.max(diff);
        if diff > 1e-3 {
            misses.push(format!("{name} {mi:.6} vs {published:.6}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = misses.is_empty() && elapsed < Duration::from_secs(1);
    let detail = if misses.is_empty() {
        format!("20/20 rows within 1e-3 (max |diff| {worst:.2e})")
    } else {
        format!(
            "{}/20 rows within 1e-3; off: {}",
            20 - misses.len(),
            misses.join("; ")
        )
    };
    report(1, pass, elapsed, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_02_ranking_order() {
    let start = Instant::now();
    let ranking = rank_features(&exact_count_dataset()).unwrap();
    let top3 = ranking.top_k(3).unwrap();
    let elapsed = start.elapsed();
    let pass = top3 == ["SEND_SMS", "RECEIVE_SMS", "READ_SMS"] && elapsed < Duration::from_secs(5);
    report(2, pass, elapsed, &format!("top-3 {top3:?}"));
    assert!(pass);
}

fn exact(n: u64) -> BigRational {
    // Counts stay far below 2^53, so the conversion is exact.
    BigRational::from_float(n as f64).unwrap()
}

fn distance(a: &BigRational, b: &BigRational) -> BigRational {
    if a > b {
        a - b
    } else {
        b - a
    }
}

/// True if `x` is the double nearest to `num / den`.
fn correctly_rounded(x: f64, num: u64, den: u64) -> bool {
    let target = exact(num) / exact(den);
    let at = |v: f64| distance(&BigRational::from_float(v).unwrap(), &target);
    let here = at(x);
    here <= at(x.next_up()) && here <= at(x.next_down())
}

fn check_rate(value: Option<f64>, num: u64, den: u64) -> bool {
    match value {
        None => den == 0,
        Some(v) => den > 0 && correctly_rounded(v, num, den),
    }
}

#[test]
fn criterion_03_metric_identities() {
    let start = Instant::now();
    let mut rng = rng_from_seed(3);
    let mut failures = 0;
    for i in 0..1000 {
        let mut draw = || {
            if rng.gen_bool(0.1) {
                0
            } else {
                rng.gen_range(0..5000u64)
            }
        };
        let mut cm = ConfusionMatrix::new(draw(), draw(), draw(), draw());
        if cm.total() == 0 {
            cm.ben_ben = 1;
        }
        let r = metrics(&cm).unwrap();
        let close = |a: f64, b: f64| (a + b - 1.0).abs() <= 1e-12;
        let identities = close(r.acc, r.err)
            && match (r.tpr, r.fnr) {
                (Some(a), Some(b)) => close(a, b),
                (None, None) => true,
                _ => false,
            }
            && match (r.tnr, r.fpr) {
                (Some(a), Some(b)) => close(a, b),
                (None, None) => true,
                _ => false,
            };
        let malware = cm.sus_ben + cm.sus_sus;
        let benign = cm.ben_ben + cm.ben_sus;
        let oracle = check_rate(r.tpr, cm.sus_sus, malware)
            && check_rate(r.fnr, cm.sus_ben, malware)
            && check_rate(r.tnr, cm.ben_ben, benign)
            && check_rate(r.fpr, cm.ben_sus, benign)
            && check_rate(Some(r.acc), cm.ben_ben + cm.sus_sus, cm.total())
            && check_rate(Some(r.err), cm.ben_sus + cm.sus_ben, cm.total())
            && check_rate(r.precision, cm.sus_sus, cm.ben_sus + cm.sus_sus);
        if !(identities && oracle) {
            failures += 1;
            eprintln!("matrix {i} {cm:?}: identities {identities}, oracle {oracle}");
        }
    }
    let elapsed = start.elapsed();
    let pass = failures == 0 && elapsed < Duration::from_secs(1);
    report(
        3,
        pass,
        elapsed,
        &format!(
            "{} of 1000 matrices satisfy identities and match the rational oracle",
            1000 - failures
        ),
    );
    assert!(pass);
}

/// Direct pair count, ties at half weight.
fn pairwise_auc(scores: &[f64], truth: &[Label]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (s_m, _) in scores.iter().zip(truth).filter(|(_, l)| l.is_malware()) {
        for (s_b, _) in scores.iter().zip(truth).filter(|(_, l)| !l.is_malware()) {
            pairs += 1.0;
            if s_m > s_b {
                wins += 1.0;
            } else if s_m == s_b {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

#[test]
fn criterion_04_auc_two_routes() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut monotone = true;
    for seed in 0..100u64 {
        let mut rng = rng_from_seed(seed);
        let n = rng.gen_range(2..300);
        let levels = if seed % 2 == 0 {
            Some(rng.gen_range(2..12))
        } else {
            None
        };
        let mut truth: Vec<Label> = (0..n)
            .map(|_| Label::from_malware(rng.gen_bool(0.4)))
            .collect();
        truth[0] = Label::Benign;
        truth[1] = Label::Malware;
        let scores: Vec<f64> = (0..n)
            .map(|_| match levels {
                Some(l) => rng.gen_range(0..l) as f64 / l as f64,
                None => rng.gen::<f64>(),
            })
            .collect();
        let roc = roc_auc(&scores, &truth).unwrap();
        let mw = mann_whitney_auc(&scores, &truth).unwrap();
        let pairs = pairwise_auc(&scores, &truth);
        worst = worst.max((roc.auc - mw).abs()).max((roc.auc - pairs).abs());
        let first = roc.points[0];
        let last = roc.points[roc.points.len() - 1];
        monotone &= (first.fpr, first.tpr, last.fpr, last.tpr) == (0.0, 0.0, 1.0, 1.0);
        monotone &= roc
            .points
            .windows(2)
            .all(|w| w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
    }
    let worked = roc_auc(
        &[0.9, 0.4, 0.6, 0.1],
        &[Label::Malware, Label::Malware, Label::Benign, Label::Benign],
    )
    .unwrap()
    .auc;
    let elapsed = start.elapsed();
    let pass = worst <= 1e-12 && monotone && worked == 0.75 && elapsed < Duration::from_secs(1);
    report(
        4,
        pass,
        elapsed,
        &format!(
            "max |trapezoid - Mann-Whitney| {worst:.1e} over 100 sets; worked example {worked}"
        ),
    );
    assert!(pass);
}

fn score_bytes(model: &impl Classifier, d: &Dataset) -> Vec<u8> {
    d.vectors()
        .iter()
        .flat_map(|v| model.malware_score(v.bits()).to_le_bytes())
        .collect()
}

#[test]
fn criterion_05_forest_oracles() {
    let start = Instant::now();
    let d = calibrated_dataset(42);
    assert_eq!((d.len(), d.n_features()), (6863, 179));
    let k = default_features_per_split(d.n_features());
    let seed = 7;

    let single = ForestParams {
        trees: 1,
        features_per_split: k,
        bootstrap: false,
        bootstrap_fraction: 1.0,
        seed,
    };
    let forest = train_forest(&d, &single).unwrap();
    let tree = train_random_tree(&d, k, tree_seed(seed, 0)).unwrap();
    let labels_match = d
        .vectors()
        .iter()
        .all(|v| forest.predict(v).unwrap().label == tree.predict(v).unwrap().label);
    let same_structure = forest.trees()[0].root() == tree.root();

    let params = ForestParams::with_defaults(d.n_features(), seed);
    let runs: Vec<(String, Vec<u8>)> = [1, 2, 8]
        .into_iter()
        .map(|workers| {
            with_workers(workers, || {
                let f = train_forest(&d, &params).unwrap();
                let text = ModelFile::new(Model::RandomForest(f.clone()), d.catalog()).to_text();
                (text, score_bytes(&f, &d))
            })
        })
        .collect();
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    let elapsed = start.elapsed();
    let pass = labels_match && same_structure && identical && elapsed < Duration::from_secs(30);
    report(
        5,
        pass,
        elapsed,
        &format!(
            "(a) T=1 no-bootstrap forest equals random tree: {}; (b) identical across 1/2/8 workers: {identical}",
            labels_match && same_structure
        ),
    );
    assert!(pass);
}

fn xor_dataset() -> Dataset {
    let mut defs = vec![
        FeatureDef::new("x0", FeatureCategory::Api, "x0"),
        FeatureDef::new("x1", FeatureCategory::Api, "x1"),
    ];
    defs.extend(
        (0..20)
            .map(|i| FeatureDef::new(format!("noise{i}"), FeatureCategory::Api, format!("n{i}"))),
    );
    let catalog = Arc::new(FeatureCatalog::new(defs).unwrap());
    let mut spec = SyntheticSpec::uniform(catalog.len(), 0.5, 1000, 1000);
    spec.xor = Some(XorInteraction {
        first: 0,
        second: 1,
        strength: 1.0,
    });
    synthesize(catalog, &spec, 42).unwrap()
}

#[test]
fn criterion_06_forest_learns_interaction() {
    let start = Instant::now();
    let d = xor_dataset();
    let rf = AlgoDescriptor::default_for("rf", 42).unwrap();
    let nb = AlgoDescriptor::default_for("nb", 42).unwrap();
    let rf_acc = cross_validate(&d, &rf, 10, 42).unwrap().metrics.acc;
    let nb_acc = cross_validate(&d, &nb, 10, 42).unwrap().metrics.acc;
    let elapsed = start.elapsed();
    let pass = rf_acc >= 0.90 && nb_acc <= 0.60 && elapsed < Duration::from_secs(60);
    report(
        6,
        pass,
        elapsed,
        &format!(
            "XOR data: forest accuracy {rf_acc:.4} (>= 0.90), naive Bayes {nb_acc:.4} (<= 0.60)"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_07_calibrated_corpus_sanity() {
    let start = Instant::now();
    let d = calibrated_dataset(42);
    let mut aucs = Vec::new();
    for kind in AlgoDescriptor::KINDS {
        let algo = AlgoDescriptor::default_for(kind, 1).unwrap();
        aucs.push((kind, cross_validate(&d, &algo, 10, 1).unwrap().roc.auc));
    }
    let rf = AlgoDescriptor::default_for("rf", 1).unwrap();
    let rf_capf = aucs.iter().find(|(k, _)| *k == "rf").unwrap().1;
    let rf_pf = cross_validate(&d.select_features(FeatureSetId::Pf), &rf, 10, 1)
        .unwrap()
        .roc
        .auc;
    let rf_af = cross_validate(&d.select_features(FeatureSetId::Af), &rf, 10, 1)
        .unwrap()
        .roc
        .auc;
    let elapsed = start.elapsed();
    let all_high = aucs.iter().all(|(_, a)| *a >= 0.90);
    let pass =
        all_high && rf_capf >= rf_pf && rf_capf >= rf_af && elapsed < Duration::from_secs(300);
    let listed: Vec<String> = aucs.iter().map(|(k, a)| format!("{k} {a:.4}")).collect();
    report(
        7,
        pass,
        elapsed,
        &format!(
            "AUC {} (all >= 0.90: {all_high}); forest CAPF {rf_capf:.4} vs PF {rf_pf:.4}, AF {rf_af:.4}",
            listed.join(", ")
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_08_logitboost_contract() {
    let start = Instant::now();
    let catalog = Arc::new(
        FeatureCatalog::new(vec![
            FeatureDef::new("signal", FeatureCategory::Permission, "p.signal"),
            FeatureDef::new("noise", FeatureCategory::Api, "noise"),
        ])
        .unwrap(),
    );
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for i in 0..30 {
        let malware = i % 2 == 0;
        vectors.push(FeatureVector::new(vec![malware, i % 3 == 0]));
        labels.push(Label::from_malware(malware));
    }
    let d = Dataset::new(catalog, vectors, labels).unwrap();
    let max_iterations = 40;
    let model = train_simple_logistic(&d, max_iterations, 5, 0).unwrap();
    let ll_selected = log_likelihood(&model, &d);
    let ll_zero = log_likelihood(&model.truncated(0), &d);
    let response = logitboost_response(Label::Malware, 0.5, Z_MAX).unwrap();
    let elapsed = start.elapsed();
    let pass = ll_selected > ll_zero
        && model.iterations_used() <= max_iterations
        && (response.z, response.w) == (2.0, 0.25)
        && elapsed < Duration::from_secs(5);
    report(
        8,
        pass,
        elapsed,
        &format!(
            "log-likelihood {ll_selected:.4} at {} iterations vs {ll_zero:.4} at 0; response (z, w) = ({}, {})",
            model.iterations_used(),
            response.z,
            response.w
        ),
    );
    assert!(pass);
}

fn tiny_catalog(f: usize) -> Arc<FeatureCatalog> {
    Arc::new(
        FeatureCatalog::new(
            (0..f)
                .map(|i| FeatureDef::new(format!("f{i}"), FeatureCategory::Api, format!("p{i}")))
                .collect(),
        )
        .unwrap(),
    )
}

/// Cells are `(vector bits, malware)`; returns correct predictions of the
/// best split-free or single-feature classifier.
fn best_stump_correct(f: usize, rows: &[(usize, bool)]) -> usize {
    let majority = |rows: &mut dyn Iterator<Item = &(usize, bool)>| {
        let (mut b, mut m) = (0, 0);
        rows.for_each(|&(_, mal)| if mal { m += 1 } else { b += 1 });
        usize::max(b, m)
    };
    let mut best = majority(&mut rows.iter());
    for j in 0..f {
        let on = majority(&mut rows.iter().filter(|(v, _)| v >> j & 1 == 1));
        let off = majority(&mut rows.iter().filter(|(v, _)| v >> j & 1 == 0));
        best = best.max(on + off);
    }
    best
}

fn build(catalog: &Arc<FeatureCatalog>, rows: &[(usize, bool)]) -> Dataset {
    let f = catalog.len();
    Dataset::new(
        Arc::clone(catalog),
        rows.iter()
            .map(|&(v, _)| FeatureVector::new((0..f).map(|j| v >> j & 1 == 1).collect()))
            .collect(),
        rows.iter().map(|&(_, m)| Label::from_malware(m)).collect(),
    )
    .unwrap()
}

/// Calls `visit` on every multiset of size `len` drawn from `0..cells`.
fn multisets(cells: usize, len: usize, current: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
    if current.len() == len {
        visit(current);
        return;
    }
    let from = current.last().copied().unwrap_or(0);
    for c in from..cells {
        current.push(c);
        multisets(cells, len, current, visit);
        current.pop();
    }
}

#[test]
fn criterion_09_small_tree_oracle() {
    let start = Instant::now();
    let mut checked = 0usize;
    let mut violations = 0usize;
    for f in 1..=3 {
        let catalog = tiny_catalog(f);
        let cells = 1 << (f + 1);
        for n in 1..=8 {
            multisets(cells, n, &mut Vec::new(), &mut |picked| {
                let rows: Vec<(usize, bool)> =
                    picked.iter().map(|&c| (c >> 1, c & 1 == 1)).collect();
                let d = build(&catalog, &rows);
                let tree = train_decision_tree(&d, SplitCriterion::Entropy, false).unwrap();
                let correct = d
                    .instances()
                    .filter(|(v, l)| tree.vote(v.bits()) == *l)
                    .count();
                if correct < best_stump_correct(f, &rows) {
                    violations += 1;
                }
                checked += 1;
            });
        }
    }

    let xor_rows = [(0b00, false), (0b10, true), (0b01, true), (0b11, false)];
    let xor = build(&tiny_catalog(2), &xor_rows);
    let xor_tree = train_decision_tree(&xor, SplitCriterion::Entropy, false).unwrap();
    let xor_perfect = xor.instances().all(|(v, l)| xor_tree.vote(v.bits()) == l);
    let stump_best = best_stump_correct(2, &xor_rows);
    let xor_ok = xor_perfect && xor_tree.depth() == 2 && stump_best * 2 <= xor_rows.len();
    assert!(matches!(xor_tree.root(), TreeNode::Split { .. }));

    let elapsed = start.elapsed();
    let pass = violations == 0 && xor_ok && elapsed < Duration::from_secs(60);
    report(
        9,
        pass,
        elapsed,
        &format!(
            "{checked} datasets, {violations} where the tree trails the best stump; XOR tree depth {} accuracy {}, best stump {stump_best}/4",
            xor_tree.depth(),
            if xor_perfect { "1.0" } else { "< 1.0" }
        ),
    );
    assert!(pass);
}

fn random_catalog(rng: &mut impl rand::Rng, n: usize) -> FeatureCatalog {
    const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_./ ";
    let categories = [
        FeatureCategory::Permission,
        FeatureCategory::Api,
        FeatureCategory::Command,
    ];
    let text = |rng: &mut dyn rand::RngCore, len: usize| -> String {
        (0..len)
            .map(|_| CHARS[rng.gen_range(0..CHARS.len() - 1)] as char)
            .collect()
    };
    let defs = (0..n)
        .map(|i| {
            let len = rng.gen_range(1..12);
            let name = format!("{}{i}", text(rng, len));
            let len = rng.gen_range(1..20);
            let pattern = text(rng, len);
            FeatureDef::new(name, categories[rng.gen_range(0..3)], pattern)
        })
        .collect();
    FeatureCatalog::new(defs).unwrap()
}

fn random_dataset(rng: &mut impl rand::Rng, catalog: Arc<FeatureCatalog>, n: usize) -> Dataset {
    let f = catalog.len();
    let mut labels: Vec<Label> = (0..n)
        .map(|_| Label::from_malware(rng.gen_bool(0.45)))
        .collect();
    labels[0] = Label::Benign;
    labels[1] = Label::Malware;
    let vectors = labels
        .iter()
        .map(|l| {
            let p = if l.is_malware() { 0.6 } else { 0.3 };
            FeatureVector::new((0..f).map(|_| rng.gen_bool(p)).collect())
        })
        .collect();
    Dataset::new(catalog, vectors, labels).unwrap()
}

#[test]
fn criterion_10_round_trips() {
    let start = Instant::now();
    let mut rng = rng_from_seed(10);
    let mut catalogs_ok = true;
    let mut datasets_ok = true;
    let mut models_ok = Vec::new();
    for round in 0..5 {
        let f = rng.gen_range(3..40);
        let catalog = random_catalog(&mut rng, f);
        let reparsed = FeatureCatalog::parse(&catalog.to_csv()).unwrap();
        catalogs_ok &= reparsed == catalog && reparsed.fingerprint() == catalog.fingerprint();

        let catalog = Arc::new(catalog);
        let n = rng.gen_range(40..200);
        let d = random_dataset(&mut rng, Arc::clone(&catalog), n);
        let back = Dataset::parse_csv(&d.to_csv_string(), Arc::clone(&catalog)).unwrap();
        datasets_ok &= back == d;

        let probes: Vec<FeatureVector> = (0..1000)
            .map(|_| FeatureVector::new((0..f).map(|_| rng.gen_bool(0.5)).collect()))
            .collect();
        for kind in AlgoDescriptor::KINDS {
            let algo = AlgoDescriptor::default_for(kind, round).unwrap();
            let model = algo.train(&d).unwrap();
            let file = ModelFile::new(model.clone(), &catalog);
            let loaded = ModelFile::parse(&file.to_text()).unwrap();
            let same = loaded.check_catalog(&catalog).is_ok()
                && probes.iter().all(|v| {
                    let a = model.predict(v).unwrap();
                    let b = loaded.model.predict(v).unwrap();
                    a.label == b.label && a.score.to_bits() == b.score.to_bits()
                });
            if round == 0 {
                models_ok.push((kind, same));
            } else if let Some(entry) = models_ok.iter_mut().find(|(k, _)| *k == kind) {
                entry.1 &= same;
            }
        }
    }
    let elapsed = start.elapsed();
    let all_models = models_ok.iter().all(|(_, ok)| *ok);
    let pass = catalogs_ok && datasets_ok && all_models && elapsed < Duration::from_secs(30);
    let kinds: Vec<String> = models_ok
        .iter()
        .map(|(k, ok)| format!("{k}={ok}"))
        .collect();
    report(
        10,
        pass,
        elapsed,
        &format!(
            "catalog {catalogs_ok}, dataset {datasets_ok}, models [{}]",
            kinds.join(" ")
        ),
    );
    assert!(pass);
}
