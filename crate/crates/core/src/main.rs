use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use masp_lab::harness::{cmd_eval, cmd_mine, cmd_sweep, cmd_train, cmd_transfer, ExperimentConfig};
use masp_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "masp-lab", version, about = "Macro-action similarity penalty experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; MASP_LAB_OUT takes precedence.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Comma-separated seeds, replacing the config's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a macro manifest from a trajectory corpus.
    Mine(Common),
    /// Train one agent per seed.
    Train(Common),
    /// Greedy evaluation of a checkpoint.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Overrides the config's `checkpoint`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Overrides the config's `eval_episodes`.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Train and evaluate along one config axis.
    Sweep(Common),
    /// Relearn a policy with a frozen similarity matrix.
    Transfer {
        #[command(flatten)]
        common: Common,
        /// Source checkpoint; overrides the config's `checkpoint`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn load(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seeds) = &common.seeds {
        cfg.seeds = seeds.clone();
        cfg.normalize()?;
    }
    let out = std::env::var_os("MASP_LAB_OUT").map_or_else(|| common.out.clone(), PathBuf::from);
    Ok((cfg, out))
}

fn checkpoint_path(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> Result<PathBuf> {
    flag.or_else(|| cfg.checkpoint.clone())
        .ok_or_else(|| Error::Config {
            field: "checkpoint".into(),
            message: "no checkpoint given (config `checkpoint` or --checkpoint)".into(),
        })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Mine(c) => {
            let (cfg, out) = load(&c)?;
            cmd_mine(&cfg, &out)?;
        }
        Command::Train(c) => {
            let (cfg, out) = load(&c)?;
            cmd_train(&cfg, &out)?;
        }
        Command::Eval {
            common,
            checkpoint,
            episodes,
        } => {
            let (mut cfg, out) = load(&common)?;
            if let Some(n) = episodes {
                cfg.eval_episodes = n;
                cfg.normalize()?;
            }
            let ck = checkpoint_path(checkpoint, &cfg)?;
            cmd_eval(&cfg, &ck, &out)?;
        }
        Command::Sweep(c) => {
            let (cfg, out) = load(&c)?;
            cmd_sweep(&cfg, &out)?;
        }
        Command::Transfer { common, checkpoint } => {
            let (cfg, out) = load(&common)?;
            let ck = checkpoint_path(checkpoint, &cfg)?;
            cmd_transfer(&cfg, &ck, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}
