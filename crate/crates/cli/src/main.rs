use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Parser, Subcommand};

use oel3d_cli::commands::{cmd_cv, cmd_describe, cmd_gen, cmd_nbv, cmd_protocol, to_sorted_json};
use oel3d_cli::config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "oel3d", version, about = "Open-ended 3D object category learning experiments")]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Configuration override, `key=value`; repeatable.
    #[arg(long = "param", short = 'p', global = true)]
    params: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset into --out-dir.
    Gen,
    /// Print the descriptor of one object view as JSON.
    Describe {
        input: PathBuf,
        /// Dictionary JSON for bow/lda representations.
        #[arg(long)]
        dictionary: Option<PathBuf>,
    },
    /// k-fold cross-validation over a dataset directory.
    Cv { dataset: PathBuf },
    /// Simulated-teacher protocol over a dataset directory.
    Protocol {
        dataset: PathBuf,
        #[arg(long)]
        context_change: bool,
    },
    /// Rank candidate camera poses for the next view.
    Nbv { world: PathBuf, poses: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    for p in &cli.params {
        cfg.apply_override(p)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate().context("invalid configuration")?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build_global()
        .context("starting the worker pool")?;

    let out = &cli.out_dir;
    match &cli.command {
        Command::Gen => cmd_gen(&cfg, out)?,
        Command::Describe { input, dictionary } => print!("{}", cmd_describe(&cfg, input, dictionary.as_deref())?),
        Command::Cv { dataset } => print!("{}", to_sorted_json(&cmd_cv(&cfg, dataset, out)?)?),
        Command::Protocol { dataset, context_change } => {
            print!("{}", to_sorted_json(&cmd_protocol(&cfg, dataset, *context_change, out)?)?)
        }
        Command::Nbv { world, poses } => print!("{}", to_sorted_json(&cmd_nbv(&cfg, world, poses, out)?)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
