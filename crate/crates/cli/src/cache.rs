//! Content-addressed stage cache.
//!
//! A stage's key hashes its name, the tool version, its parameters and the
//! bytes of every input file. Outputs are built in a scratch directory and
//! moved into place only when the stage succeeds; the key and output digests
//! are then written to `.cache/<stage>.json`. A rerun whose key matches and
//! whose outputs still hash to the recorded digests is skipped.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

const CACHE_DIR: &str = ".cache";
const STAGING_DIR: &str = ".staging";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StageStatus {
    Computed,
    Cached,
}

pub struct Stage<'a> {
    pub name: &'static str,
    pub inputs: Vec<PathBuf>,
    pub params: serde_json::Value,
    pub outputs: &'a [&'a str],
}

#[derive(Serialize, Deserialize, PartialEq)]
struct CacheRecord {
    key: String,
    outputs: BTreeMap<String, String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

/// Cache key of a stage. Fails if an input cannot be read.
pub fn stage_key(stage: &Stage) -> Result<String> {
    let mut h = Sha256::new();
    h.update(b"nftwash-stage\0");
    h.update(env!("CARGO_PKG_VERSION").as_bytes());
    h.update(b"\0");
    h.update(stage.name.as_bytes());
    h.update(b"\0");
    h.update(stage.params.to_string().as_bytes());
    for input in &stage.inputs {
        h.update(b"\0");
        h.update(hash_file(input)?.as_bytes());
    }
    Ok(hex(&h.finalize()))
}

fn record_path(out_dir: &Path, name: &str) -> PathBuf {
    out_dir.join(CACHE_DIR).join(format!("{name}.json"))
}

fn is_fresh(out_dir: &Path, stage: &Stage, key: &str) -> bool {
    let Ok(text) = fs::read_to_string(record_path(out_dir, stage.name)) else {
        return false;
    };
    let Ok(record) = serde_json::from_str::<CacheRecord>(&text) else {
        return false;
    };
    record.key == key
        && stage.outputs.iter().all(|o| {
            record.outputs.get(*o).is_some_and(|digest| {
                hash_file(&out_dir.join(o)).is_ok_and(|actual| &actual == digest)
            })
        })
}

/// Removes a stage's outputs and cache record.
fn discard(out_dir: &Path, stage: &Stage) {
    for o in stage.outputs {
        let _ = fs::remove_file(out_dir.join(o));
    }
    let _ = fs::remove_file(record_path(out_dir, stage.name));
}

/// Runs `build` in a scratch directory unless the cached outputs are
/// current. On failure the scratch directory and any previous outputs of
/// the stage are removed.
pub fn run_stage<F>(out_dir: &Path, stage: Stage, build: F) -> Result<StageStatus>
where
    F: FnOnce(&Path) -> Result<()>,
{
    let wrap = |e: CliError| CliError::Stage {
        stage: stage.name.to_string(),
        source: Box::new(e),
    };
    let key = stage_key(&stage).map_err(wrap)?;
    if is_fresh(out_dir, &stage, &key) {
        log::info!("stage {}: cached", stage.name);
        return Ok(StageStatus::Cached);
    }
    let started = Instant::now();
    let staging = out_dir.join(STAGING_DIR).join(stage.name);
    let result = (|| {
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| CliError::io(&staging, e))?;
        }
        fs::create_dir_all(&staging).map_err(|e| CliError::io(&staging, e))?;
        build(&staging)?;
        let mut outputs = BTreeMap::new();
        for o in stage.outputs {
            let src = staging.join(o);
            outputs.insert(o.to_string(), hash_file(&src)?);
        }
        let cache_dir = out_dir.join(CACHE_DIR);
        fs::create_dir_all(&cache_dir).map_err(|e| CliError::io(&cache_dir, e))?;
        // Drop the old record first so an interrupted move never looks fresh.
        let record = record_path(out_dir, stage.name);
        let _ = fs::remove_file(&record);
        for o in stage.outputs {
            let dst = out_dir.join(o);
            fs::rename(staging.join(o), &dst).map_err(|e| CliError::io(&dst, e))?;
        }
        let body = serde_json::to_string_pretty(&CacheRecord { key, outputs })
            .map_err(nftwash::Error::from)?;
        fs::write(&record, body).map_err(|e| CliError::io(&record, e))?;
        Ok(())
    })();
    let _ = fs::remove_dir_all(&staging);
    if let Some(parent) = staging.parent() {
        let _ = fs::remove_dir(parent);
    }
    match result {
        Ok(()) => {
            log::info!(
                "stage {}: computed in {:.2}s",
                stage.name,
                started.elapsed().as_secs_f64()
            );
            Ok(StageStatus::Computed)
        }
        Err(e) => {
            discard(out_dir, &stage);
            Err(wrap(e))
        }
    }
}

/// Seed of a named stage: the run seed offset by a hash of the name, so
/// stages draw independent streams from one configured seed.
pub fn stage_seed(seed: u64, stage: &str) -> u64 {
    let digest = Sha256::digest(stage.as_bytes());
    let mut low = [0u8; 8];
    low.copy_from_slice(&digest[..8]);
    seed.wrapping_add(u64::from_le_bytes(low))
}
