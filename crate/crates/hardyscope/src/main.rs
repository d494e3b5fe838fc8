use clap::{Parser, Subcommand};
use hardyscope::config::load_config;
use hardyscope::runner::run_job;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "hardyscope",
    version,
    about = "Geodesic mean-distance weights, Hardy inequalities, and Dirichlet spectra \
             on conformal surface domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the job described by a config file and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides HARDYSCOPE_OUT and the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: machine parallelism).
        #[arg(long)]
        threads: Option<usize>,
        /// Seed override for the job.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config file without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out, threads, seed } => run(config, out, threads, seed),
        Command::Validate { config } => validate(config),
    }
}

fn run(
    config_path: PathBuf,
    out: Option<PathBuf>,
    threads: Option<usize>,
    seed: Option<u64>,
) -> ExitCode {
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not size the worker pool: {e}");
            return ExitCode::FAILURE;
        }
    }
    let bytes = match std::fs::read(&config_path) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::FAILURE;
        }
    };
    let mut cfg = match load_config(&config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Some(s) = seed {
        cfg.params.seed = Some(s);
    }
    let out_dir = out
        .or_else(|| std::env::var_os("HARDYSCOPE_OUT").map(PathBuf::from))
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("hardyscope_out"));
    match run_job(&cfg, &bytes, &out_dir) {
        Ok(bundle) => {
            println!(
                "task {} -> {} ({} artifacts)",
                bundle.manifest.task,
                bundle.out_dir.display(),
                bundle.manifest.artifacts.len()
            );
            for c in &bundle.manifest.checks {
                println!(
                    "  [{}] {}: {}",
                    if c.pass { "pass" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if let Some(err) = &bundle.manifest.error {
                eprintln!("error: {err}");
            }
            if bundle.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn validate(config_path: PathBuf) -> ExitCode {
    match load_config(&config_path) {
        Ok(cfg) => {
            println!(
                "config ok: task={} seed={} n_dirs={}",
                cfg.task.name(),
                cfg.seed(),
                cfg.n_dirs()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
