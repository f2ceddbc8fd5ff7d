use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;

use returnlab_cli::config::{self, ExperimentConfig, Format};
use returnlab_cli::manifest::RunManifest;
use returnlab_cli::{execute, exit, replay, status_code, Command, RunError};

#[derive(Parser)]
#[command(name = "returnlab", version, about = "Return-time statistics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "RETURNLAB_OUT_DIR", default_value = "returnlab-out")]
    out: PathBuf,
    /// Overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Outputs do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides `format` from the config.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact count laws of a cylinder word in a Markov chain.
    Exact(Common),
    /// Monte Carlo count laws for the doubling or Gauss map.
    Mc(Common),
    /// Numerical checks of the quantitative lemmas on exact instances.
    Lemmas(Common),
    /// Cluster-law scan along a nested word family, with the schedule and gap tables.
    Scan(Common),
    /// Compound Poisson, Pólya-Aeppli and compound binomial tables.
    Dist(Common),
    /// Repeats a recorded run and compares output checksums.
    Replay {
        manifest: PathBuf,
        #[arg(long, env = "RETURNLAB_OUT_DIR", default_value = "returnlab-replay")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn init_threads(threads: Option<usize>) -> Result<usize, RunError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(RunError::Config("--threads: must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Runtime(e.into()))?;
    }
    Ok(rayon::current_num_threads())
}

fn load_config(common: &Common) -> Result<ExperimentConfig, RunError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
            config::parse(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(format) = common.format {
        cfg.format = format;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32, RunError> {
    let (command, common) = match cli.command {
        Cmd::Exact(c) => (Command::Exact, c),
        Cmd::Mc(c) => (Command::Mc, c),
        Cmd::Lemmas(c) => (Command::Lemmas, c),
        Cmd::Scan(c) => (Command::Scan, c),
        Cmd::Dist(c) => (Command::Dist, c),
        Cmd::Replay { manifest, out, threads } => {
            let threads = init_threads(threads)?;
            let recorded = RunManifest::load(&manifest)?;
            let (fresh, diff) = replay(&recorded, &out, threads)?;
            if diff.is_empty() {
                println!("replayed {} outputs into {}: all checksums match", fresh.outputs.len(), out.display());
                return Ok(status_code(&fresh));
            }
            for f in &diff {
                println!("checksum mismatch: {f}");
            }
            return Ok(exit::RUNTIME);
        }
    };
    let cfg = load_config(&common)?;
    let threads = init_threads(common.threads)?;
    let manifest = execute(command, &cfg, &common.out, threads)?;
    println!(
        "{} outputs written to {} (status: {})",
        manifest.outputs.len(),
        common.out.display(),
        manifest.status
    );
    println!("{}", serde_json::to_string(&manifest.summary).unwrap_or_default());
    Ok(status_code(&manifest))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
