//! The pipeline stages. Each reads its inputs from files, so any stage can
//! be rerun alone against an output directory left by earlier stages.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nftwash::analysis::{
    build_report, cluster_profiles, default_rules, label_clusters, parse_rules, pca_fit,
    write_boxplot_csv, write_pca_scores_csv, write_radar_csv, write_wash_candidates_csv,
    PopulationStats,
};
use nftwash::clustering::{cross_validate, kmeans_fit, select_k, KMeansParams, SelectParams};
use nftwash::eda::run_eda;
use nftwash::features::{
    assemble_feature_matrix, extract_features, prune_correlated, read_matrix_csv, standardize,
    write_correlation_csv, DroppedFeature, FeatureMatrix,
};
use nftwash::ingest::{
    load_rate_table, parse_transactions_str, write_jsonl, write_rejected_csv, LedgerStore,
    RejectedRateRow, TransactionKind,
};
use nftwash::synth::{generate_market, SynthConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::cache::{run_stage, stage_seed, Stage, StageStatus};
use crate::config::PipelineConfig;
use crate::error::{CliError, Result};

pub const LEDGER_DB: &str = "ledger.sqlite";
pub const INGEST_OUTPUTS: [&str; 3] = [LEDGER_DB, "rejected.csv", "ingest.json"];
pub const EDA_OUTPUTS: [&str; 3] = ["eda.json", "first_digit.csv", "round_hist.csv"];
pub const FEATURE_OUTPUTS: [&str; 4] = [
    "features_raw.csv",
    "features_std.csv",
    "correlation.csv",
    "features.json",
];
pub const CLUSTER_OUTPUTS: [&str; 6] = [
    "k_selection.csv",
    "k_selection.json",
    "cross_validation.csv",
    "cross_validation.json",
    "model.json",
    "assignments.csv",
];
pub const ANALYZE_OUTPUTS: [&str; 5] = [
    "pca_scores.csv",
    "radar.csv",
    "boxplot.csv",
    "wash_candidates.csv",
    "report.json",
];
pub const SYNTH_OUTPUTS: [&str; 4] = [
    "transactions.jsonl",
    "rates.csv",
    "truth.csv",
    "synth_config.toml",
];

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(nftwash::Error::from)?;
    w.write_all(b"\n").map_err(|e| CliError::io(path, e))?;
    finish(path, w)
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_reader(open(path)?).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_csv_rows<S: Serialize>(path: &Path, rows: impl IntoIterator<Item = S>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(create(path)?);
    for r in rows {
        wtr.serialize(r).map_err(nftwash::Error::from)?;
    }
    wtr.flush().map_err(|e| CliError::io(path, e))
}

/// Runs `f` with a writer on `path`, then flushes it.
fn with_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> nftwash::Result<()>,
) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    finish(path, w)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

#[derive(Serialize)]
struct IngestSummary<'a> {
    records: usize,
    sales: usize,
    transfers: usize,
    rejected: usize,
    first_day: Option<String>,
    last_day: Option<String>,
    rate_days: usize,
    rates_rejected: &'a [RejectedRateRow],
}

pub fn ingest(cfg: &PipelineConfig) -> Result<StageStatus> {
    let tx_path = cfg.transactions_path()?.to_path_buf();
    let rates_path = cfg.rates_path()?.to_path_buf();
    let out = &cfg.output_dir;
    ensure_dir(out)?;
    let stage = Stage {
        name: "ingest",
        inputs: vec![tx_path.clone(), rates_path.clone()],
        params: json!({}),
        outputs: &INGEST_OUTPUTS,
    };
    run_stage(out, stage, |dir| {
        let text = fs::read_to_string(&tx_path).map_err(|e| CliError::io(&tx_path, e))?;
        let ledger = parse_transactions_str(&text)?;
        let rates = load_rate_table(open(&rates_path)?).map_err(|e| match e {
            nftwash::Error::Csv(c) => CliError::Parse {
                path: rates_path.clone(),
                message: c.to_string(),
            },
            other => other.into(),
        })?;
        if rates.table.is_empty() {
            return Err(CliError::Parse {
                path: rates_path.clone(),
                message: "no usable rate rows".into(),
            });
        }
        log::info!(
            "parsed {} records ({} rejected), {} rate days",
            ledger.records.len(),
            ledger.rejected.len(),
            rates.table.len()
        );
        let mut store = LedgerStore::open(&dir.join(LEDGER_DB))?;
        store.replace(&ledger.records, &rates.table)?;
        drop(store);
        let p = dir.join("rejected.csv");
        with_file(&p, |w| write_rejected_csv(&ledger.rejected, w))?;
        let days: Vec<_> = ledger.records.iter().map(|r| r.day()).collect();
        let summary = IngestSummary {
            records: ledger.records.len(),
            sales: ledger.count_kind(TransactionKind::Sale),
            transfers: ledger.count_kind(TransactionKind::Transfer),
            rejected: ledger.rejected.len(),
            first_day: days.iter().min().map(|d| d.to_string()),
            last_day: days.iter().max().map(|d| d.to_string()),
            rate_days: rates.table.len(),
            rates_rejected: &rates.rejected,
        };
        write_json(&dir.join("ingest.json"), &summary)
    })
}

fn load_ledger(out: &Path) -> Result<LedgerStore> {
    let path = out.join(LEDGER_DB);
    if !path.exists() {
        return Err(CliError::io(
            &path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "run the ingest stage first"),
        ));
    }
    Ok(LedgerStore::open(&path)?)
}

pub fn eda(cfg: &PipelineConfig) -> Result<StageStatus> {
    let out = &cfg.output_dir;
    let stage = Stage {
        name: "eda",
        inputs: vec![out.join(LEDGER_DB)],
        params: json!({
            "max_round_price": cfg.eda.max_round_price,
            "tail_fraction": cfg.eda.tail_fraction,
        }),
        outputs: &EDA_OUTPUTS,
    };
    run_stage(out, stage, |dir| {
        let records = load_ledger(out)?.transactions()?;
        let report = run_eda(&records, cfg.eda.max_round_price, cfg.eda.tail_fraction)?;
        if let Some(b) = &report.benford {
            log::info!(
                "benford chi2 = {:.2} (reject = {})",
                b.test.chi_squared,
                b.test.reject
            );
        }
        write_json(&dir.join("eda.json"), &report)?;
        #[derive(Serialize)]
        struct DigitRow {
            digit: u32,
            count: u64,
            observed: f64,
            expected: f64,
        }
        let digits: Vec<DigitRow> = match &report.benford {
            Some(b) => (0..9)
                .map(|d| DigitRow {
                    digit: d as u32 + 1,
                    count: b.distribution.counts[d],
                    observed: b.distribution.proportions[d],
                    expected: b.expected_proportions[d],
                })
                .collect(),
            None => Vec::new(),
        };
        let p = dir.join("first_digit.csv");
        if digits.is_empty() {
            fs::write(&p, "digit,count,observed,expected\n").map_err(|e| CliError::io(&p, e))?;
        } else {
            write_csv_rows(&p, digits)?;
        }
        let p = dir.join("round_hist.csv");
        let mut wtr = csv::Writer::from_writer(create(&p)?);
        wtr.write_record(["price", "count"])
            .map_err(nftwash::Error::from)?;
        for (price, count) in &report.round_hist.counts {
            wtr.write_record([price.to_string(), count.to_string()])
                .map_err(nftwash::Error::from)?;
        }
        wtr.flush().map_err(|e| CliError::io(&p, e))
    })
}

/// Contents of `features.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub wallets: usize,
    pub transactions: usize,
    pub correlation_threshold: f64,
    pub feature_names: Vec<String>,
    /// Columns kept after correlation pruning; the clustering input.
    pub retained: Vec<String>,
    pub dropped: Vec<DroppedEntry>,
    pub column_means: Vec<f64>,
    pub column_sds: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DroppedEntry {
    pub feature: String,
    pub correlated_with: String,
    pub r: f64,
}

impl From<&DroppedFeature> for DroppedEntry {
    fn from(d: &DroppedFeature) -> Self {
        Self {
            feature: d.feature.clone(),
            correlated_with: d.correlated_with.clone(),
            r: d.r,
        }
    }
}

pub fn features(cfg: &PipelineConfig) -> Result<StageStatus> {
    let out = &cfg.output_dir;
    let stage = Stage {
        name: "features",
        inputs: vec![out.join(LEDGER_DB)],
        params: json!({ "correlation_threshold": cfg.features.correlation_threshold }),
        outputs: &FEATURE_OUTPUTS,
    };
    run_stage(out, stage, |dir| {
        let store = load_ledger(out)?;
        let records = store.transactions()?;
        let rates = store.rates()?;
        let (_, feats) = extract_features(&records, &rates)?;
        let raw = assemble_feature_matrix(&feats)?;
        let std = standardize(&raw);
        let pruned = prune_correlated(&std, cfg.features.correlation_threshold);
        log::info!(
            "{} wallets, {} of {} features retained",
            raw.rows(),
            pruned.retained.len(),
            raw.cols()
        );
        let p = dir.join("features_raw.csv");
        with_file(&p, |w| raw.write_csv(w))?;
        let p = dir.join("features_std.csv");
        with_file(&p, |w| std.write_csv(w))?;
        let p = dir.join("correlation.csv");
        with_file(&p, |w| {
            write_correlation_csv(&raw.feature_names, &pruned.correlation, w)
        })?;
        let manifest = FeatureManifest {
            wallets: raw.rows(),
            transactions: records.len(),
            correlation_threshold: cfg.features.correlation_threshold,
            feature_names: raw.feature_names.clone(),
            retained: pruned.retained.clone(),
            dropped: pruned.dropped.iter().map(DroppedEntry::from).collect(),
            column_means: std.column_means.clone().unwrap_or_default(),
            column_sds: std.column_sds.clone().unwrap_or_default(),
        };
        write_json(&dir.join("features.json"), &manifest)
    })
}

/// Standardized matrix restricted to the retained features, carrying the
/// raw-unit means and deviations of those columns.
pub fn clustering_matrix(out: &Path) -> Result<(FeatureManifest, FeatureMatrix)> {
    let manifest: FeatureManifest = read_json(&out.join("features.json"))?;
    let mut std = read_matrix_csv(open(&out.join("features_std.csv"))?, true)?;
    if std.feature_names != manifest.feature_names {
        return Err(CliError::Parse {
            path: out.join("features_std.csv"),
            message: "columns disagree with features.json".into(),
        });
    }
    std.column_means = Some(manifest.column_means.clone());
    std.column_sds = Some(manifest.column_sds.clone());
    let selected = std.select_features(&manifest.retained)?;
    Ok((manifest, selected))
}

/// Contents of `model.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelExport {
    pub k: usize,
    pub seed: u64,
    pub feature_names: Vec<String>,
    pub centroids_std: Vec<Vec<f64>>,
    pub centroids: Vec<Vec<f64>>,
    pub assignments_file: String,
    pub wcss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
}

#[derive(Serialize)]
struct KSelectionRow {
    k: usize,
    wcss: f64,
    dbi: f64,
    silhouette: f64,
    fresh_wcss: f64,
    warm_wcss: Option<f64>,
}

pub fn cluster(cfg: &PipelineConfig) -> Result<StageStatus> {
    let seed = cfg.seed()?;
    let out = &cfg.output_dir;
    let c = &cfg.cluster;
    let stage = Stage {
        name: "cluster",
        inputs: vec![out.join("features_std.csv"), out.join("features.json")],
        params: json!({ "seed": seed, "cluster": c }),
        outputs: &CLUSTER_OUTPUTS,
    };
    run_stage(out, stage, |dir| {
        let (_, x) = clustering_matrix(out)?;
        let kmeans = KMeansParams {
            max_iter: c.max_iter,
            tol: c.tol,
            restarts: c.restarts,
        };
        let params = SelectParams {
            kmeans,
            silhouette_subsample: c.silhouette_subsample,
        };
        let select_seed = stage_seed(seed, "cluster");
        let selection = select_k(&x.values, &cfg.k_values(), select_seed, params)?;
        let report = &selection.report;
        let k = c.chosen_k.unwrap_or(report.chosen_k);
        log::info!(
            "knee {:?}, automatic choice {}, using k = {k}",
            report.knee_k,
            report.chosen_k
        );
        let model = match selection.model(k) {
            Some(m) => m.clone(),
            None => kmeans_fit(&x.values, k, select_seed, kmeans)?,
        };
        let cv = cross_validate(
            &x.values,
            k,
            c.cv_splits,
            c.train_fraction,
            stage_seed(seed, "cross_validation"),
            kmeans,
        )?;
        write_csv_rows(
            &dir.join("k_selection.csv"),
            report.rows.iter().map(|r| KSelectionRow {
                k: r.k,
                wcss: r.wcss,
                dbi: r.dbi,
                silhouette: r.silhouette,
                fresh_wcss: r.fresh_wcss,
                warm_wcss: r.warm_wcss,
            }),
        )?;
        write_json(&dir.join("k_selection.json"), report)?;
        write_csv_rows(&dir.join("cross_validation.csv"), &cv.splits)?;
        write_json(&dir.join("cross_validation.json"), &cv)?;
        let export = ModelExport {
            k,
            seed: select_seed,
            feature_names: x.feature_names.clone(),
            centroids_std: model.centroids.iter_rows().map(<[f64]>::to_vec).collect(),
            centroids: model
                .centroids
                .iter_rows()
                .map(|r| x.destandardize_row(r))
                .collect(),
            assignments_file: "assignments.csv".into(),
            wcss: model.wcss,
            iterations: model.iterations,
            converged: model.converged,
            restarts: c.restarts,
        };
        write_json(&dir.join("model.json"), &export)?;
        #[derive(Serialize)]
        struct Assignment<'a> {
            wallet: &'a str,
            cluster: usize,
        }
        write_csv_rows(
            &dir.join("assignments.csv"),
            x.wallets
                .iter()
                .zip(&model.assignments)
                .map(|(w, &c)| Assignment {
                    wallet: w,
                    cluster: c,
                }),
        )
    })
}

/// Reads `assignments.csv`, checking it lines up with `wallets`.
pub fn read_assignments(path: &Path, wallets: &[String]) -> Result<Vec<usize>> {
    #[derive(Deserialize)]
    struct Row {
        wallet: String,
        cluster: usize,
    }
    let mut rdr = csv::Reader::from_reader(open(path)?);
    let mut out = Vec::with_capacity(wallets.len());
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if wallets.get(i) != Some(&row.wallet) {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                message: format!(
                    "row {} wallet {} does not match the feature matrix",
                    i + 1,
                    row.wallet
                ),
            });
        }
        out.push(row.cluster);
    }
    if out.len() != wallets.len() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            message: format!("{} assignments for {} wallets", out.len(), wallets.len()),
        });
    }
    Ok(out)
}

pub fn analyze(cfg: &PipelineConfig) -> Result<StageStatus> {
    let out = &cfg.output_dir;
    let mut inputs: Vec<PathBuf> = [
        "features_raw.csv",
        "features_std.csv",
        "features.json",
        "eda.json",
        "k_selection.json",
        "cross_validation.json",
        "model.json",
        "assignments.csv",
    ]
    .iter()
    .map(|f| out.join(f))
    .collect();
    if let Some(rules) = &cfg.analyze.rules {
        inputs.push(rules.clone());
    }
    let stage = Stage {
        name: "analyze",
        inputs,
        params: json!({
            "pca_components": cfg.analyze.pca_components,
            "custom_rules": cfg.analyze.rules.is_some(),
        }),
        outputs: &ANALYZE_OUTPUTS,
    };
    run_stage(out, stage, |dir| {
        let raw = read_matrix_csv(open(&out.join("features_raw.csv"))?, false)?;
        let (manifest, x) = clustering_matrix(out)?;
        let model: ModelExport = read_json(&out.join("model.json"))?;
        let assignments = read_assignments(&out.join("assignments.csv"), &raw.wallets)?;
        let rules = match &cfg.analyze.rules {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
                parse_rules(&text).map_err(|e| CliError::Parse {
                    path: path.clone(),
                    message: e.to_string(),
                })?
            }
            None => default_rules(),
        };
        let mut profiles = cluster_profiles(&raw, &assignments, model.k)?;
        label_clusters(&mut profiles, &rules, &PopulationStats::new(&raw));
        for p in &profiles {
            log::info!("cluster {} ({} wallets): {}", p.cluster, p.size, p.label);
        }
        let pca = pca_fit(&x.values, cfg.analyze.pca_components)?;
        let p = dir.join("pca_scores.csv");
        with_file(&p, |w| {
            write_pca_scores_csv(w, &raw.wallets, &pca, &assignments)
        })?;
        let p = dir.join("radar.csv");
        with_file(&p, |w| write_radar_csv(w, &profiles))?;
        let p = dir.join("boxplot.csv");
        with_file(&p, |w| write_boxplot_csv(w, &profiles))?;
        let p = dir.join("wash_candidates.csv");
        let mut w = create(&p)?;
        let wash = write_wash_candidates_csv(&mut w, &raw, &assignments, &profiles)?;
        finish(&p, w)?;
        let eda: serde_json::Value = read_json(&out.join("eda.json"))?;
        let k_selection: serde_json::Value = read_json(&out.join("k_selection.json"))?;
        let cv: serde_json::Value = read_json(&out.join("cross_validation.json"))?;
        let report = build_report(
            &eda,
            &manifest,
            &k_selection,
            &cv,
            &pca,
            &manifest.retained,
            &profiles,
        )?;
        log::info!(
            "{wash} wash candidates ({:.2}% of wallets)",
            report.wash.percentage
        );
        write_json(&dir.join("report.json"), &report)
    })
}

/// Loads the market description named in the config, or the built-in one.
pub fn synth_config(cfg: &PipelineConfig) -> Result<SynthConfig> {
    let mut sc = match &cfg.synth.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            toml::from_str(&text).map_err(|e| CliError::Parse {
                path: path.clone(),
                message: e.message().to_string(),
            })?
        }
        None => SynthConfig::keystone(),
    };
    if let Some(seed) = cfg.synth.seed {
        sc.seed = seed;
    }
    Ok(sc)
}

pub fn synth(cfg: &PipelineConfig) -> Result<StageStatus> {
    let out = &cfg.output_dir;
    ensure_dir(out)?;
    let sc = synth_config(cfg)?;
    let stage = Stage {
        name: "synth",
        inputs: Vec::new(),
        params: serde_json::to_value(&sc).map_err(nftwash::Error::from)?,
        outputs: &SYNTH_OUTPUTS,
    };
    run_stage(out, stage, |dir| {
        let ledger = generate_market(&sc)?;
        log::info!(
            "{} transactions across {} wallets",
            ledger.transactions.len(),
            ledger.truth.len()
        );
        let p = dir.join("transactions.jsonl");
        with_file(&p, |w| write_jsonl(&ledger.transactions, w))?;
        let p = dir.join("rates.csv");
        with_file(&p, |w| ledger.rates.write_csv(w))?;
        let p = dir.join("truth.csv");
        with_file(&p, |w| ledger.write_truth_csv(w))?;
        let p = dir.join("synth_config.toml");
        let text = toml::to_string(&sc).map_err(|e| CliError::Config(e.to_string()))?;
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    })
}

/// Outcome of every stage a command ran, in order.
pub type StageReport = Vec<(&'static str, StageStatus)>;

pub fn pipeline(cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.seed()?;
    let mut report = Vec::new();
    type StageFn = fn(&PipelineConfig) -> Result<StageStatus>;
    let stages: [(&'static str, StageFn); 5] = [
        ("ingest", ingest),
        ("eda", eda),
        ("features", features),
        ("cluster", cluster),
        ("analyze", analyze),
    ];
    for (name, stage) in stages {
        report.push((name, stage(cfg)?));
    }
    Ok(report)
}
