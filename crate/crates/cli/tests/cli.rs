use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nftwash::synth::{Archetype, SynthConfig};
use nftwash_cli::stages::{
    ANALYZE_OUTPUTS, CLUSTER_OUTPUTS, EDA_OUTPUTS, FEATURE_OUTPUTS, INGEST_OUTPUTS,
};

fn nftwash(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nftwash"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "info")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// A fifth of the keystone market, small enough for a quick end-to-end run.
fn write_small_market(dir: &Path) -> PathBuf {
    let mut cfg = SynthConfig::keystone();
    for a in &mut cfg.archetypes {
        a.wallet_count /= 5;
    }
    let path = dir.join("small.toml");
    fs::write(&path, toml::to_string(&cfg).unwrap()).unwrap();
    path
}

fn digests(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect()
}

const RUN: [&str; 12] = [
    "pipeline",
    "--seed",
    "11",
    "--transactions",
    "syn/transactions.jsonl",
    "--rates",
    "syn/rates.csv",
    "-o",
    "run",
    "--k-max",
    "6",
    "--restarts=3",
];

#[test]
fn committed_keystone_config_is_the_builtin_market() {
    let text = fs::read_to_string(repo_root().join("configs/keystone.toml")).unwrap();
    let cfg: SynthConfig = toml::from_str(&text).unwrap();
    assert_eq!(cfg, SynthConfig::keystone());
}

#[test]
fn example_pipeline_config_parses() {
    let cfg =
        nftwash_cli::PipelineConfig::load(&repo_root().join("configs/pipeline.toml")).unwrap();
    cfg.validate().unwrap();
    assert!(cfg.seed.is_some());
}

#[test]
fn pipeline_writes_every_artifact_and_reruns_from_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let market = write_small_market(dir);
    let o = nftwash(
        &[
            "synth",
            "--synth-config",
            market.to_str().unwrap(),
            "-o",
            "syn",
        ],
        dir,
    );
    assert!(o.status.success(), "{}", stderr(&o));

    let o = nftwash(&RUN, dir);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let out = dir.join("run");
    for f in INGEST_OUTPUTS
        .iter()
        .chain(&EDA_OUTPUTS)
        .chain(&FEATURE_OUTPUTS)
        .chain(&CLUSTER_OUTPUTS)
        .chain(&ANALYZE_OUTPUTS)
    {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("features.json")).unwrap()).unwrap();
    let wallets = manifest["wallets"].as_u64().unwrap();
    assert!(wallets > 300);
    assert_eq!(report["wallets"], wallets);
    let radar_rows = fs::read_to_string(out.join("radar.csv"))
        .unwrap()
        .lines()
        .count()
        - 1;
    assert_eq!(radar_rows, report["k"].as_u64().unwrap() as usize * 26);

    let first = digests(&out);
    let o = nftwash(&RUN, dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = stderr(&o);
    for stage in ["ingest", "eda", "features", "cluster", "analyze"] {
        assert!(log.contains(&format!("stage {stage}: cached")), "{log}");
    }
    assert_eq!(first, digests(&out));

    // A changed parameter recomputes only the stages that depend on it.
    let mut args = RUN.to_vec();
    args.push("--k=3");
    let o = nftwash(&args, dir);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = stderr(&o);
    assert!(log.contains("stage features: cached"), "{log}");
    assert!(log.contains("stage cluster: computed"), "{log}");
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    assert_eq!(model["k"], 3);
}

#[test]
fn synth_truth_covers_every_wallet() {
    let tmp = tempfile::tempdir().unwrap();
    let market = write_small_market(tmp.path());
    let o = nftwash(
        &[
            "synth",
            "--synth-config",
            market.to_str().unwrap(),
            "-o",
            "s",
        ],
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let truth =
        nftwash::synth::read_truth_csv(fs::File::open(tmp.path().join("s/truth.csv")).unwrap())
            .unwrap();
    assert!(truth.values().any(|a| *a == Archetype::WashTrader));
    let text = fs::read_to_string(tmp.path().join("s/transactions.jsonl")).unwrap();
    let ledger = nftwash::ingest::parse_transactions_str(&text).unwrap();
    assert!(ledger.rejected.is_empty());
    for r in &ledger.records {
        assert!(truth.contains_key(&r.from_address));
        assert!(truth.contains_key(&r.to_address));
    }
}

#[test]
fn missing_rates_file_fails_with_its_path() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("tx.csv"),
        "token_address,token_id,from_address,to_address,value,block_number,block_timestamp\n",
    )
    .unwrap();
    let o = nftwash(
        &[
            "ingest",
            "--transactions",
            "tx.csv",
            "--rates",
            "no_such_rates.csv",
            "-o",
            "out",
        ],
        tmp.path(),
    );
    assert!(!o.status.success());
    let err = stderr(&o);
    let line = err.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["stage"], "ingest");
    assert_eq!(v["error"], "io");
    assert!(v["path"].as_str().unwrap().contains("no_such_rates.csv"));
    for f in INGEST_OUTPUTS {
        assert!(!tmp.path().join("out").join(f).exists());
    }
}

#[test]
fn seed_is_required() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nftwash(&["cluster", "-o", "out"], tmp.path());
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_str(stderr(&o).trim()).unwrap();
    assert_eq!(v["error"], "config");
    assert!(v["message"].as_str().unwrap().contains("seed"));
}

#[test]
fn bad_rules_file_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let market = write_small_market(dir);
    assert!(nftwash(
        &[
            "synth",
            "--synth-config",
            market.to_str().unwrap(),
            "-o",
            "syn"
        ],
        dir
    )
    .status
    .success());
    fs::write(
        dir.join("rules.txt"),
        "[odd]\nlabel = odd\nnot_a_feature.mean > 1\n",
    )
    .unwrap();
    let mut args = RUN.to_vec();
    args.extend(["--k=3", "--rules", "rules.txt"]);
    let o = nftwash(&args, dir);
    assert!(!o.status.success());
    let v: serde_json::Value = serde_json::from_str(stderr(&o).lines().last().unwrap()).unwrap();
    assert_eq!(v["stage"], "analyze");
    assert!(v["path"].as_str().unwrap().contains("rules.txt"));
    assert!(!dir.join("run/report.json").exists());
    assert!(dir.join("run/model.json").exists());
}

#[test]
fn help_and_version() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nftwash(&["--version"], tmp.path());
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
    let o = nftwash(&["--help"], tmp.path());
    assert!(o.status.success());
    let help = String::from_utf8_lossy(&o.stdout);
    for cmd in [
        "ingest", "eda", "features", "cluster", "analyze", "synth", "pipeline",
    ] {
        assert!(help.contains(cmd), "{help}");
    }
}
