//! Acceptance suite: one PASS, FAIL or SKIP line per criterion.
//!
//! Expected values come from hand derivations (the committed worksheet),
//! sampling oracles, or brute-force reimplementations in this file; none
//! are taken from the code under test.
//!
//! Optional runs:
//! - `NFTWASH_PAPER_TRANSACTIONS` and `NFTWASH_PAPER_RATES` point at the
//!   published ledger and rate files to check the headline numbers.
//! - `NFTWASH_SKIP_SCALE=1` skips the million-transaction run, which takes
//!   several minutes on a single core.

#[path = "../../core/tests/common/expr.rs"]
mod expr;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nftwash::analysis::pca_fit;
use nftwash::clustering::{
    davies_bouldin, elbow_knee, kmeans_fit, kmeans_fit_traced, silhouette, KMeansParams,
};
use nftwash::eda::{benford_chi_squared, first_digit_distribution};
use nftwash::features::FEATURE_NAMES;
use nftwash::ingest::write_jsonl;
use nftwash::synth::{generate_market, Archetype, SynthConfig};
use nftwash::Matrix;
use nftwash_cli::{run, Command, PipelineConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::Value;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn within(elapsed: Duration, budget_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < budget_s, format!("{s:.2}s of {budget_s}s budget"))
}

// Independent reference implementations.

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn brute_centroids(data: &Matrix, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|c| {
            let members: Vec<&[f64]> = (0..data.rows())
                .filter(|&i| labels[i] == c)
                .map(|i| data.row(i))
                .collect();
            (0..data.cols())
                .map(|j| members.iter().map(|r| r[j]).sum::<f64>() / members.len() as f64)
                .collect()
        })
        .collect()
}

fn brute_dbi(data: &Matrix, labels: &[usize], k: usize) -> f64 {
    let cent = brute_centroids(data, labels, k);
    let scatter: Vec<f64> = (0..k)
        .map(|c| {
            let d: Vec<f64> = (0..data.rows())
                .filter(|&i| labels[i] == c)
                .map(|i| dist(data.row(i), &cent[c]))
                .collect();
            d.iter().sum::<f64>() / d.len() as f64
        })
        .collect();
    (0..k)
        .map(|i| {
            (0..k)
                .filter(|&j| j != i)
                .map(|j| (scatter[i] + scatter[j]) / dist(&cent[i], &cent[j]))
                .fold(f64::MIN, f64::max)
        })
        .sum::<f64>()
        / k as f64
}

fn brute_silhouette(data: &Matrix, labels: &[usize], k: usize) -> f64 {
    let m = data.rows();
    let mut total = 0.0;
    for i in 0..m {
        let mean_to = |c: usize| {
            let d: Vec<f64> = (0..m)
                .filter(|&j| j != i && labels[j] == c)
                .map(|j| dist(data.row(i), data.row(j)))
                .collect();
            (d.iter().sum::<f64>(), d.len())
        };
        let (sa, na) = mean_to(labels[i]);
        if na == 0 {
            continue;
        }
        let a = sa / na as f64;
        let b = (0..k)
            .filter(|&c| c != labels[i])
            .map(|c| {
                let (s, n) = mean_to(c);
                s / n as f64
            })
            .fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / m as f64
}

fn choose2(n: usize) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

fn brute_ari<A: Eq + std::hash::Hash, B: Eq + std::hash::Hash>(a: &[A], b: &[B]) -> f64 {
    let mut table: HashMap<(&A, &B), usize> = HashMap::new();
    let mut rows: HashMap<&A, usize> = HashMap::new();
    let mut cols: HashMap<&B, usize> = HashMap::new();
    for (x, y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&n| choose2(n)).sum();
    let sa: f64 = rows.values().map(|&n| choose2(n)).sum();
    let sb: f64 = cols.values().map(|&n| choose2(n)).sum();
    let expected = sa * sb / choose2(a.len());
    (index - expected) / ((sa + sb) / 2.0 - expected)
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    Matrix::from_vec(
        m,
        n,
        (0..m * n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    )
}

fn blobs(
    rng: &mut ChaCha8Rng,
    centers: &[[f64; 2]],
    per: usize,
    spread: f64,
) -> (Matrix, Vec<usize>) {
    let noise = Normal::new(0.0, spread).unwrap();
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (c, center) in centers.iter().enumerate() {
        for _ in 0..per {
            rows.push([center[0] + noise.sample(rng), center[1] + noise.sample(rng)]);
            truth.push(c);
        }
    }
    (Matrix::from_rows(&rows), truth)
}

// Shared pipeline runs.

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_market(ledger: &nftwash::synth::SyntheticLedger, dir: &Path) -> (PathBuf, PathBuf) {
    fs::create_dir_all(dir).unwrap();
    let tx = dir.join("transactions.jsonl");
    write_jsonl(&ledger.transactions, fs::File::create(&tx).unwrap()).unwrap();
    let rates = dir.join("rates.csv");
    ledger
        .rates
        .write_csv(fs::File::create(&rates).unwrap())
        .unwrap();
    (tx, rates)
}

struct KeystoneRun {
    out: PathBuf,
    truth: BTreeMap<String, Archetype>,
    elapsed: Duration,
    transactions: usize,
    _dir: tempfile::TempDir,
}

fn keystone() -> &'static KeystoneRun {
    static RUN: OnceLock<KeystoneRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let started = Instant::now();
        let synth = SynthConfig::keystone();
        let ledger = generate_market(&synth).unwrap();
        let (tx, rates) = write_market(&ledger, &dir.path().join("market"));
        let mut cfg = PipelineConfig {
            seed: Some(synth.seed),
            output_dir: dir.path().join("run"),
            ..PipelineConfig::default()
        };
        cfg.input.transactions = Some(tx);
        cfg.input.rates = Some(rates);
        cfg.cluster.chosen_k = Some(5);
        run(Command::Pipeline, &cfg).unwrap();
        KeystoneRun {
            out: cfg.output_dir.clone(),
            truth: ledger.truth.clone(),
            elapsed: started.elapsed(),
            transactions: ledger.transactions.len(),
            _dir: dir,
        }
    })
}

fn read_assignments(out: &Path) -> Vec<(String, usize)> {
    let mut rdr = csv::Reader::from_path(out.join("assignments.csv")).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].to_string(), r[1].parse().unwrap())
        })
        .collect()
}

// Criteria.

fn hand_ledger() -> Verdict {
    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/hand_ledger");
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig {
        seed: Some(1),
        output_dir: dir.path().to_path_buf(),
        ..PipelineConfig::default()
    };
    cfg.input.transactions = Some(fixtures.join("transactions.csv"));
    cfg.input.rates = Some(fixtures.join("rates.csv"));
    let started = Instant::now();
    run(Command::Ingest, &cfg).unwrap();
    run(Command::Features, &cfg).unwrap();
    let elapsed = started.elapsed();

    let mut rdr = csv::Reader::from_path(dir.path().join("features_raw.csv")).unwrap();
    let header = rdr.headers().unwrap().clone();
    let mut got: HashMap<(String, String), String> = HashMap::new();
    for row in rdr.records() {
        let row = row.unwrap();
        for (j, name) in header.iter().enumerate().skip(1) {
            got.insert((row[0].to_string(), name.to_string()), row[j].to_string());
        }
    }
    let expected = fs::read_to_string(fixtures.join("expected.csv")).unwrap();
    let mut lines = expected.lines();
    let wallets: Vec<&str> = lines.next().unwrap().split(',').skip(1).collect();
    let integer = ["in_degree", "out_degree", "max_trans_per_day"];
    let (mut checked, mut bad) = (0, Vec::new());
    for line in lines {
        let mut cells = line.split(',');
        let feature = cells.next().unwrap();
        for (w, cell) in wallets.iter().zip(cells) {
            let want = expr::eval(cell);
            let text = &got[&(w.to_string(), feature.to_string())];
            let value: f64 = text.parse().unwrap();
            let ok = if integer.contains(&feature) {
                value == want && !text.contains('.')
            } else {
                (value - want).abs() <= 1e-9
            };
            if !ok {
                bad.push(format!("{feature}@{w}: {text} vs {cell}"));
            }
            checked += 1;
        }
    }
    let (fast, timing) = within(elapsed, 1.0);
    let complete = checked == FEATURE_NAMES.len() * wallets.len();
    verdict(
        bad.is_empty() && fast && complete,
        format!(
            "{checked} feature values, {} mismatched {bad:?}; {timing}",
            bad.len()
        ),
    )
}

fn keystone_recovery() -> Verdict {
    let run = keystone();
    let assignments = read_assignments(&run.out);
    let clusters: Vec<usize> = assignments.iter().map(|(_, c)| *c).collect();
    let truth: Vec<Archetype> = assignments.iter().map(|(w, _)| run.truth[w]).collect();
    let ari = brute_ari(&clusters, &truth);

    let report = read_json(&run.out.join("report.json"));
    let mut matched = 0;
    let mut summary = Vec::new();
    for c in report["clusters"].as_array().unwrap() {
        let id = c["cluster"].as_u64().unwrap() as usize;
        let mut votes: BTreeMap<Archetype, usize> = BTreeMap::new();
        for (cl, a) in clusters.iter().zip(&truth) {
            if *cl == id {
                *votes.entry(*a).or_default() += 1;
            }
        }
        let majority = votes
            .iter()
            .max_by_key(|(_, n)| **n)
            .map(|(a, _)| *a)
            .unwrap();
        let label = c["label"].as_str().unwrap();
        if label == majority.expected_label() {
            matched += 1;
        }
        summary.push(format!("{majority}->{label}"));
    }
    let k = report["k"].as_u64().unwrap();
    let (fast, timing) = within(run.elapsed, 60.0);
    let big = assignments.len() >= 2000 && run.transactions >= 20_000;
    verdict(
        ari >= 0.8 && matched >= 4 && k == 5 && fast && big,
        format!(
            "{} wallets, {} transactions, ARI {ari:.4} (>= 0.8), {matched}/5 labels [{}]; {timing}",
            assignments.len(),
            run.transactions,
            summary.join(", ")
        ),
    )
}

fn kmeans_properties() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut increases = 0;
    for trial in 0..100u64 {
        let m = rng.random_range(40..=300);
        let n = rng.random_range(2..=6);
        let k = rng.random_range(2..=8);
        let data = random_matrix(&mut rng, m, n);
        let (_, trace) = kmeans_fit_traced(&data, k, trial, KMeansParams::default()).unwrap();
        increases += trace
            .windows(2)
            .filter(|w| w[1] > w[0] * (1.0 + 1e-12))
            .count();
    }

    let (data, truth) = blobs(&mut rng, &[[0.0, 0.0], [10.0, 0.0], [5.0, 9.0]], 100, 0.5);
    let model = kmeans_fit(&data, 3, 5, KMeansParams::default()).unwrap();
    let ari = brute_ari(&model.assignments, &truth);

    let big = random_matrix(&mut rng, 5000, 6);
    let params = KMeansParams {
        restarts: 3,
        ..KMeansParams::default()
    };
    let fit_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| kmeans_fit(&big, 7, 42, params).unwrap())
    };
    let bits = |m: &nftwash::clustering::KMeansModel| {
        let mut v: Vec<u64> = m.centroids.as_slice().iter().map(|x| x.to_bits()).collect();
        v.push(m.wcss.to_bits());
        (v, m.assignments.clone())
    };
    let reference = bits(&fit_with(1));
    let identical = [2, 4, 8].iter().all(|&t| bits(&fit_with(t)) == reference);
    let (fast, timing) = within(started.elapsed(), 30.0);
    verdict(
        increases == 0 && ari > 0.99 && identical && fast,
        format!(
            "{increases} objective increases over 100 instances, 3-blob ARI {ari:.4}, \
             1/2/4/8 workers identical = {identical}; {timing}"
        ),
    )
}

fn validity_indices() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let m = rng.random_range(20..=200);
        let n = rng.random_range(2..=5);
        let k = rng.random_range(2..=6);
        let data = random_matrix(&mut rng, m, n);
        // Labels with every cluster non-empty, some of them singletons.
        let mut labels: Vec<usize> = (0..m)
            .map(|i| if i < k { i } else { rng.random_range(0..k) })
            .collect();
        if k > 2 && rng.random_bool(0.3) {
            for (i, l) in labels.iter_mut().enumerate() {
                if *l == k - 1 && i != k - 1 {
                    *l = 0;
                }
            }
        }
        let dbi = davies_bouldin(&data, &labels).unwrap();
        let sil = silhouette(&data, &labels, 0, 0).unwrap();
        worst = worst
            .max((dbi - brute_dbi(&data, &labels, k)).abs())
            .max((sil - brute_silhouette(&data, &labels, k)).abs());
    }
    let (fast, timing) = within(started.elapsed(), 10.0);
    verdict(
        worst <= 1e-9 && fast,
        format!("largest deviation from brute force {worst:.2e} over 20 instances; {timing}"),
    )
}

fn benford_suite() -> Verdict {
    let started = Instant::now();
    let mut accepted = 0;
    let mut rejected_uniform = 0;
    for trial in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + trial);
        let benford: Vec<f64> = (0..10_000)
            .map(|_| 10f64.powf(rng.random::<f64>()))
            .collect();
        if !benford_chi_squared(&first_digit_distribution(&benford).unwrap()).reject {
            accepted += 1;
        }
        let uniform: Vec<f64> = (0..10_000)
            .map(|_| rng.random_range(1..=9) as f64 + rng.random::<f64>() * 0.99)
            .collect();
        if benford_chi_squared(&first_digit_distribution(&uniform).unwrap()).reject {
            rejected_uniform += 1;
        }
    }
    let (fast, timing) = within(started.elapsed(), 5.0);
    verdict(
        accepted >= 90 && rejected_uniform == 100 && fast,
        format!(
            "Benford samples accepted {accepted}/100 (>= 90), uniform digits rejected \
             {rejected_uniform}/100; {timing}"
        ),
    )
}

fn kneedle() -> Verdict {
    let curve = |ys: &[f64]| -> Vec<(usize, f64)> {
        ys.iter().enumerate().map(|(i, &y)| (i + 1, y)).collect()
    };
    let a = elbow_knee(&curve(&[100.0, 50.0, 25.0, 24.0, 23.0, 22.0])).unwrap();
    let b = elbow_knee(&curve(&[100.0, 99.0, 98.0, 10.0, 9.0, 8.0])).unwrap();
    let c = elbow_knee(&curve(&[100.0, 90.0, 80.0, 70.0, 60.0, 50.0])).unwrap();
    verdict(
        a == Some(3) && b == Some(4) && c.is_none(),
        format!("knees {a:?} (want 3), {b:?} (want 4), linear {c:?} (want none)"),
    )
}

fn pca_checks() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let v = [1.0, -2.0, 0.5, 3.0];
    let rank1: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            let t: f64 = rng.random_range(-5.0..5.0);
            v.iter().map(|x| 7.0 + t * x).collect()
        })
        .collect();
    let p = pca_fit(&Matrix::from_rows(&rank1), 2).unwrap();
    let rank1_err = (p.explained_variance_ratio[0] - 1.0).abs();

    let theta = 30f64.to_radians();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rotated: Vec<[f64; 2]> = (0..10_000)
        .map(|_| {
            let (a, b) = (3.0 * normal.sample(&mut rng), normal.sample(&mut rng));
            [
                a * theta.cos() - b * theta.sin(),
                a * theta.sin() + b * theta.cos(),
            ]
        })
        .collect();
    let p = pca_fit(&Matrix::from_rows(&rotated), 2).unwrap();
    let pc1 = p.components.row(0);
    let cos = (pc1[0] * theta.cos() + pc1[1] * theta.sin()).abs().min(1.0);
    let angle = cos.acos().to_degrees();

    let data = random_matrix(&mut rng, 500, 8);
    let p = pca_fit(&data, 5).unwrap();
    let mut ortho: f64 = 0.0;
    for i in 0..5 {
        for j in 0..5 {
            let dot: f64 = p
                .components
                .row(i)
                .iter()
                .zip(p.components.row(j))
                .map(|(a, b)| a * b)
                .sum();
            let want = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((dot - want).abs());
        }
    }
    verdict(
        rank1_err <= 1e-9 && angle <= 1.0 && ortho <= 1e-9,
        format!(
            "rank-1 ratio error {rank1_err:.1e}, rotation error {angle:.3} deg, \
             orthonormality error {ortho:.1e}"
        ),
    )
}

fn cv_stability() -> Verdict {
    let run = keystone();
    let cv = read_json(&run.out.join("cross_validation.json"));
    let splits = cv["splits"].as_array().unwrap();
    let gap = splits
        .iter()
        .map(|s| (s["test_dbi"].as_f64().unwrap() - s["train_dbi"].as_f64().unwrap()).abs())
        .fold(0.0, f64::max);
    verdict(
        splits.len() == 10 && gap < 0.3,
        format!(
            "{} splits, max |test DBI - train DBI| = {gap:.4} (< 0.3)",
            splits.len()
        ),
    )
}

fn published_dataset() -> Verdict {
    let (Ok(tx), Ok(rates)) = (
        std::env::var("NFTWASH_PAPER_TRANSACTIONS"),
        std::env::var("NFTWASH_PAPER_RATES"),
    ) else {
        return Verdict::Skip(
            "published dataset not supplied (set NFTWASH_PAPER_TRANSACTIONS and NFTWASH_PAPER_RATES)"
                .into(),
        );
    };
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig {
        seed: Some(20_240_501),
        output_dir: dir.path().to_path_buf(),
        ..PipelineConfig::default()
    };
    cfg.input.transactions = Some(tx.into());
    cfg.input.rates = Some(rates.into());
    cfg.cluster.chosen_k = Some(7);
    if let Err(e) = run(Command::Pipeline, &cfg) {
        return Verdict::Fail(e.to_json_line());
    }
    let report = read_json(&dir.path().join("report.json"));
    let chi = report["eda"]["benford"]["test"]["chi_squared"]
        .as_f64()
        .unwrap();
    let ks = &report["k_selection"];
    let knee = ks["knee_k"].as_u64();
    let sil = |k: u64| {
        ks["rows"]
            .as_array()
            .unwrap()
            .iter()
            .find(|r| r["k"] == k)
            .and_then(|r| r["silhouette"].as_f64())
            .unwrap_or(f64::NAN)
    };
    let sils = [sil(7), sil(8), sil(9)];
    let sil_ok = sils
        .iter()
        .zip([0.3, 0.29, 0.28])
        .all(|(s, w)| (s - w).abs() <= 0.05);
    let pca = report["pca"]["cumulative_ratio"].as_f64().unwrap();
    let mut sizes: Vec<f64> = report["clusters"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["size"].as_f64().unwrap())
        .collect();
    sizes.sort_by(|a, b| b.total_cmp(a));
    let want = [137_623.0, 96_420.0, 11_359.0, 5_145.0, 2_248.0, 122.0, 7.0];
    let sizes_ok = sizes.len() == 7
        && sizes
            .iter()
            .zip(want)
            .all(|(s, w)| (s - w).abs() <= 0.1 * w);
    let chi_ok = (chi - 24_688.0).abs() <= 0.05 * 24_688.0;
    verdict(
        chi_ok && knee == Some(7) && sil_ok && (pca - 0.2566).abs() <= 0.02 && sizes_ok,
        format!(
            "chi {chi:.0}, knee {knee:?}, silhouettes {sils:.3?}, PCA {:.2}%, sizes {sizes:?}",
            pca * 100.0
        ),
    )
}

fn scale() -> Verdict {
    if std::env::var_os("NFTWASH_SKIP_SCALE").is_some() {
        return Verdict::Skip("NFTWASH_SKIP_SCALE is set".into());
    }
    let dir = tempfile::tempdir().unwrap();
    let ledger = generate_market(&SynthConfig::scale()).unwrap();
    let (tx, rates) = write_market(&ledger, &dir.path().join("market"));
    let n_tx = ledger.transactions.len();
    drop(ledger);
    let mut cfg = PipelineConfig {
        seed: Some(1),
        output_dir: dir.path().join("run"),
        ..PipelineConfig::default()
    };
    cfg.input.transactions = Some(tx);
    cfg.input.rates = Some(rates);
    let started = Instant::now();
    if let Err(e) = run(Command::Pipeline, &cfg) {
        return Verdict::Fail(e.to_json_line());
    }
    let elapsed = started.elapsed();
    let wallets = read_json(&cfg.output_dir.join("features.json"))["wallets"]
        .as_u64()
        .unwrap();
    let (fast, timing) = within(elapsed, 900.0);
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    verdict(
        fast && n_tx >= 1_000_000 && wallets >= 250_000,
        format!("{n_tx} transactions, {wallets} wallets on {cores} cores; {timing}"),
    )
}

fn main() {
    // Honour `cargo test -- --list` style probes without running the suite.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 10] = [
        ("hand-ledger features", hand_ledger),
        ("keystone market recovery", keystone_recovery),
        ("k-means properties", kmeans_properties),
        ("validity indices vs brute force", validity_indices),
        ("Benford screen", benford_suite),
        ("knee locator", kneedle),
        ("PCA", pca_checks),
        ("cross-validation stability", cv_stability),
        ("published-dataset reproduction", published_dataset),
        ("million-transaction scale", scale),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (tag, detail) = match check() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skip(d) => ("SKIP", d),
        };
        println!(
            "[{tag}] {:>2}. {name}: {detail} ({:.2}s)",
            i + 1,
            started.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed or were skipped");
}
