use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nftwash_cli::{run, CliError, Command, PipelineConfig};

/// Wallet clustering and wash-trade screening for NFT transaction ledgers.
#[derive(Parser)]
#[command(name = "nftwash", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Parse the ledger and rates into the local store.
    Ingest,
    /// Benford, round-price and tail screens on transaction prices.
    Eda,
    /// Per-wallet features, standardization and correlation pruning.
    Features,
    /// k selection, the final K-means fit and cross-validation.
    Cluster,
    /// PCA, cluster profiles, labels and the master report.
    Analyze,
    /// Write a synthetic ledger with known wallet archetypes.
    Synth,
    /// Run ingest, eda, features, cluster and analyze in order.
    Pipeline,
}

#[derive(Args)]
struct Overrides {
    /// TOML config file.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    /// Maximum worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Transactions file (JSON lines or CSV).
    #[arg(long, global = true)]
    transactions: Option<PathBuf>,
    /// Daily rates CSV (date,eth_usd,gas_eth).
    #[arg(long, global = true)]
    rates: Option<PathBuf>,
    /// Smallest k in the selection sweep.
    #[arg(long, global = true)]
    k_min: Option<usize>,
    /// Largest k in the selection sweep.
    #[arg(long, global = true)]
    k_max: Option<usize>,
    /// Use this k instead of the automatic choice.
    #[arg(short, long, global = true)]
    k: Option<usize>,
    #[arg(long, global = true)]
    correlation_threshold: Option<f64>,
    /// Points scored for the silhouette (0 = all).
    #[arg(long, global = true)]
    silhouette_subsample: Option<usize>,
    #[arg(long, global = true)]
    cv_splits: Option<usize>,
    /// K-means++ restarts per fit.
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Cluster labeling rules file.
    #[arg(long, global = true)]
    rules: Option<PathBuf>,
    /// Synthetic market description (TOML).
    #[arg(long, global = true)]
    synth_config: Option<PathBuf>,
    /// Seed for the synthetic market, replacing the one in its description.
    #[arg(long, global = true)]
    synth_seed: Option<u64>,
}

impl Overrides {
    fn apply(self, cfg: &mut PipelineConfig) {
        fn set<T>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
            if v.is_some() {
                *slot = v;
            }
        }
        set_opt(&mut cfg.seed, self.seed);
        set(&mut cfg.output_dir, self.output);
        set_opt(&mut cfg.workers, self.workers);
        set_opt(&mut cfg.input.transactions, self.transactions);
        set_opt(&mut cfg.input.rates, self.rates);
        set(&mut cfg.cluster.k_range[0], self.k_min);
        set(&mut cfg.cluster.k_range[1], self.k_max);
        set_opt(&mut cfg.cluster.chosen_k, self.k);
        set(
            &mut cfg.features.correlation_threshold,
            self.correlation_threshold,
        );
        set(
            &mut cfg.cluster.silhouette_subsample,
            self.silhouette_subsample,
        );
        set(&mut cfg.cluster.cv_splits, self.cv_splits);
        set(&mut cfg.cluster.restarts, self.restarts);
        set_opt(&mut cfg.analyze.rules, self.rules);
        set_opt(&mut cfg.synth.config, self.synth_config);
        set_opt(&mut cfg.synth.seed, self.synth_seed);
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.overrides.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    if let Some(n) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("workers: {e}")))?;
    }
    let command = match cli.command {
        Cmd::Ingest => Command::Ingest,
        Cmd::Eda => Command::Eda,
        Cmd::Features => Command::Features,
        Cmd::Cluster => Command::Cluster,
        Cmd::Analyze => Command::Analyze,
        Cmd::Synth => Command::Synth,
        Cmd::Pipeline => Command::Pipeline,
    };
    run(command, &cfg)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}
