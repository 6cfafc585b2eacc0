//! `scenebloom` command-line interface.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "scenebloom",
    version,
    about = "Scene retrieval with distance-sensitive Bloom filters"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Run configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the `seed` config key.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Overrides one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train PCA, GMM and hash-bank files from a training manifest.
    Train(commands::TrainArgs),
    /// Index the scenes of a manifest.
    Build(commands::BuildArgs),
    /// Rank scenes for one query descriptor file.
    Query(commands::QueryArgs),
    /// Run a query set against an index and report mAP and latency.
    Evaluate(commands::EvaluateArgs),
    /// Write a synthetic planted-retrieval dataset.
    GenSynth(commands::GenSynthArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .downcast_ref::<scenebloom::Error>()
                .is_some_and(scenebloom::Error::is_config_error);
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
