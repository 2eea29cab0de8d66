//! Orchestration for the `nftwash` command: configuration, the stage
//! cache and the stages themselves.
//!
//! Stages run in order `ingest`, `eda`, `features`, `cluster`, `analyze`,
//! each reading the previous stages' files from the output directory.
//! `synth` writes a synthetic ledger in the ingest formats.

pub mod cache;
pub mod config;
pub mod error;
pub mod stages;

pub use cache::{stage_seed, StageStatus};
pub use config::PipelineConfig;
pub use error::{CliError, Result};
pub use stages::{pipeline, StageReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Ingest,
    Eda,
    Features,
    Cluster,
    Analyze,
    Synth,
    Pipeline,
}

/// Validates the config and runs one command.
pub fn run(command: Command, cfg: &PipelineConfig) -> Result<StageReport> {
    cfg.validate()?;
    let single = |name, status| Ok(vec![(name, status)]);
    match command {
        Command::Ingest => single("ingest", stages::ingest(cfg)?),
        Command::Eda => single("eda", stages::eda(cfg)?),
        Command::Features => single("features", stages::features(cfg)?),
        Command::Cluster => single("cluster", stages::cluster(cfg)?),
        Command::Analyze => single("analyze", stages::analyze(cfg)?),
        Command::Synth => single("synth", stages::synth(cfg)?),
        Command::Pipeline => stages::pipeline(cfg),
    }
}
