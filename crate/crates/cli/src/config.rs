//! Pipeline configuration: a TOML file whose every field can be overridden
//! from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root of all randomness. Required; there is no clock-based fallback.
    pub seed: Option<u64>,
    pub output_dir: PathBuf,
    /// Caps the worker pool; defaults to one worker per core.
    pub workers: Option<usize>,
    pub input: InputConfig,
    pub eda: EdaConfig,
    pub features: FeaturesConfig,
    pub cluster: ClusterConfig,
    pub analyze: AnalyzeConfig,
    pub synth: SynthSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    pub transactions: Option<PathBuf>,
    pub rates: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EdaConfig {
    /// Largest whole-ETH price kept in the round-number histogram.
    pub max_round_price: u64,
    pub tail_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub correlation_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    /// Inclusive `[low, high]` range of k swept during selection.
    pub k_range: [usize; 2],
    /// Skips the automatic choice and uses this k.
    pub chosen_k: Option<usize>,
    /// Points scored for the silhouette; 0 scores every point.
    pub silhouette_subsample: usize,
    pub cv_splits: usize,
    pub train_fraction: f64,
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    /// Labeling rules file; the built-in rules apply when absent.
    pub rules: Option<PathBuf>,
    pub pca_components: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    /// Market description; the built-in five-archetype market when absent.
    pub config: Option<PathBuf>,
    /// Replaces the seed embedded in the market description.
    pub seed: Option<u64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: None,
            output_dir: PathBuf::from("out"),
            workers: None,
            input: InputConfig::default(),
            eda: EdaConfig::default(),
            features: FeaturesConfig::default(),
            cluster: ClusterConfig::default(),
            analyze: AnalyzeConfig::default(),
            synth: SynthSection::default(),
        }
    }
}

impl Default for EdaConfig {
    fn default() -> Self {
        Self {
            max_round_price: 100,
            tail_fraction: 0.05,
        }
    }
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        Self {
            correlation_threshold: 0.9,
        }
    }
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            k_range: [2, 15],
            chosen_k: None,
            silhouette_subsample: 2000,
            cv_splits: 10,
            train_fraction: 0.8,
            restarts: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        Self {
            rules: None,
            pca_components: 2,
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    /// Loads a config file. Relative paths inside it resolve against the
    /// file's own directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.message().to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        rebase(base, &mut cfg.input.transactions);
        rebase(base, &mut cfg.input.rates);
        rebase(base, &mut cfg.analyze.rules);
        rebase(base, &mut cfg.synth.config);
        if cfg.output_dir.is_relative() {
            cfg.output_dir = base.join(&cfg.output_dir);
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| {
            CliError::Config("seed: required (set it in the config or with --seed)".into())
        })
    }

    /// Checks every field and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let [lo, hi] = self.cluster.k_range;
        if lo < 2 || hi < lo {
            errs.push(format!(
                "cluster.k_range: [{lo}, {hi}] must be non-empty, increasing and start at 2 or more"
            ));
        }
        if let Some(k) = self.cluster.chosen_k {
            if k < 2 {
                errs.push(format!("cluster.chosen_k: {k} is below 2"));
            }
        }
        if self.cluster.silhouette_subsample == 1 {
            errs.push("cluster.silhouette_subsample: must be 0 or at least 2".into());
        }
        if self.cluster.cv_splits == 0 {
            errs.push("cluster.cv_splits: must be positive".into());
        }
        if !(self.cluster.train_fraction > 0.0 && self.cluster.train_fraction < 1.0) {
            errs.push(format!(
                "cluster.train_fraction: {} outside (0, 1)",
                self.cluster.train_fraction
            ));
        }
        if self.cluster.restarts == 0 {
            errs.push("cluster.restarts: must be positive".into());
        }
        if self.cluster.max_iter == 0 {
            errs.push("cluster.max_iter: must be positive".into());
        }
        if self.cluster.tol.is_nan() || self.cluster.tol < 0.0 {
            errs.push("cluster.tol: must be non-negative".into());
        }
        let t = self.features.correlation_threshold;
        if !(t > 0.0 && t <= 1.0) {
            errs.push(format!(
                "features.correlation_threshold: {t} outside (0, 1]"
            ));
        }
        if self.eda.max_round_price < 1 {
            errs.push("eda.max_round_price: must be at least 1".into());
        }
        let f = self.eda.tail_fraction;
        if !(f > 0.0 && f <= 0.2) {
            errs.push(format!("eda.tail_fraction: {f} outside (0, 0.2]"));
        }
        if self.analyze.pca_components == 0 {
            errs.push("analyze.pca_components: must be positive".into());
        }
        if self.workers == Some(0) {
            errs.push("workers: must be positive".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(errs.join("; ")))
        }
    }

    pub fn transactions_path(&self) -> Result<&Path> {
        self.input
            .transactions
            .as_deref()
            .ok_or_else(|| CliError::Config("input.transactions: required".into()))
    }

    pub fn rates_path(&self) -> Result<&Path> {
        self.input
            .rates
            .as_deref()
            .ok_or_else(|| CliError::Config("input.rates: required".into()))
    }

    pub fn k_values(&self) -> Vec<usize> {
        let [lo, hi] = self.cluster.k_range;
        (lo..=hi).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg: PipelineConfig = toml::from_str("").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.cluster.cv_splits, 10);
        assert_eq!(cfg.features.correlation_threshold, 0.9);
        assert!(cfg.seed().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<PipelineConfig>("sed = 4").is_err());
        assert!(toml::from_str::<PipelineConfig>("[cluster]\nk = 4").is_err());
    }

    #[test]
    fn validation_collects_all_problems() {
        let mut cfg = PipelineConfig::default();
        cfg.cluster.k_range = [5, 3];
        cfg.cluster.train_fraction = 1.0;
        cfg.features.correlation_threshold = 0.0;
        let msg = cfg.validate().unwrap_err().to_string();
        for field in [
            "cluster.k_range",
            "cluster.train_fraction",
            "features.correlation_threshold",
        ] {
            assert!(msg.contains(field), "{msg}");
        }
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seed = 3\noutput_dir = \"o\"\n[input]\ntransactions = \"tx.jsonl\"\nrates = \"/abs/rates.csv\"\n",
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.output_dir, dir.path().join("o"));
        assert_eq!(
            cfg.transactions_path().unwrap(),
            dir.path().join("tx.jsonl")
        );
        assert_eq!(cfg.rates_path().unwrap(), Path::new("/abs/rates.csv"));
    }
}
