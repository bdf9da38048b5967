//! `ghft`: Hubbard-model ground states and excitation spectra from the command line.
//!
//! Exit codes: 0 success, 1 solver error, 2 configuration error, 3 i/o error,
//! 4 ground state not converged, 5 covariance file from different parameters,
//! 6 verification property failed.

mod config;
mod error;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(name = "ghft", version, about = "Generalized Hartree-Fock ground states and dispersion relations of the 2D Hubbard model")]
struct Cli {
    /// Worker threads for the per-momentum work (default: all cores).
    #[arg(long, global = true, env = "GHFT_THREADS")]
    threads: Option<usize>,
    /// Overrides `output.dir` of the configuration.
    #[arg(long, global = true, env = "GHFT_OUT_DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file: sectioned `key = value` text, or JSON if it ends in `.json`.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides one key, e.g. `--set model.u=-2` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Translation-invariant ground state: summary JSON and covariance file.
    Ground(ConfigArgs),
    /// Dispersion CSVs and classification JSON from a saved ground state.
    Dispersion {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Covariance file (default: `<dir>/<prefix>.cm`).
        #[arg(long)]
        cm: Option<PathBuf>,
    },
    /// Cross-checks against the exact and dense oracles on a small lattice.
    Verify(ConfigArgs),
    /// Ground states over the product of `sweep.u` and `sweep.mu`.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated u values (overrides `sweep.u`).
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        /// Comma-separated mu values (overrides `sweep.mu`).
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<String>,
        /// Also compute dispersions.
        #[arg(long)]
        dispersion: bool,
    },
    /// Prints the configuration that would be used, in text form.
    Config(ConfigArgs),
}

fn load(args: &ConfigArgs, out_dir: &Option<PathBuf>, base: RunConfig) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => base,
    };
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(d) = out_dir {
        cfg.output.dir = d.clone();
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Ground(args) => {
            let cfg = load(args, &cli.out_dir, RunConfig::default())?;
            let out = run::run_ground(&cfg)?;
            let s = &out.summary;
            println!("n = {:.6}  p = {:.6}  E = {:.10}  residual {:.2e}  iterations {}", s.n, s.p, s.energy, s.residual, s.iterations);
            run::require_converged(s)
        }
        Command::Dispersion { cfg: args, cm } => {
            let cfg = load(args, &cli.out_dir, RunConfig::default())?;
            let c = run::run_dispersion(&cfg, cm.as_deref())?;
            println!(
                "{} branches, gap {:.6e} ({}), flat {:?}",
                c.branch_count,
                c.gap,
                if c.gapless { "gapless" } else { "gapped" },
                c.flat_branches
            );
            Ok(())
        }
        Command::Verify(args) => {
            let mut base = RunConfig::default();
            let small = ghft::verify::VerifyConfig::default().params;
            (base.model.u, base.model.mu, base.model.lx, base.model.ly) = (small.u, small.mu, small.lx, small.ly);
            let cfg = load(args, &cli.out_dir, base)?;
            run::run_verify(&cfg)
        }
        Command::Sweep { cfg: args, u, mu, dispersion } => {
            let mut cfg = load(args, &cli.out_dir, RunConfig::default())?;
            if let Some(u) = u {
                cfg.set("sweep.u", u)?;
            }
            if let Some(mu) = mu {
                cfg.set("sweep.mu", mu)?;
            }
            cfg.sweep.dispersion |= *dispersion;
            run::run_sweep(&cfg)
        }
        Command::Config(args) => {
            let cfg = load(args, &cli.out_dir, RunConfig::default())?;
            cfg.validate()?;
            print!("{}", cfg.to_kv());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
