//! Batch front end for the `zeta-ratios` experiments: JSON configs, the
//! randomized identity suite, CSV/JSON outputs and run manifests.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod suite;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::Outcome;
pub use config::RunConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "zratios", version, about = "Ratios, moments and correlation experiments for the Riemann zeta function")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for randomized identity instances (overrides the config).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Also write (T, relErr) series.
    #[arg(long, global = true)]
    pub emit_plot_data: bool,

    /// Fail instead of sieving missing coefficient tables.
    #[arg(long, global = true)]
    pub no_build: bool,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sieve the (A, C) and (B, D) coefficient tables.
    Sieve,
    /// Run randomized instances of every identity family.
    CheckIdentities {
        /// Instances per family.
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Residual tolerance for every family, replacing the defaults.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Truncated average against its prediction over the T grid.
    Moments,
    /// Ratios average against the swap-sum prediction over the T grid.
    Ratios,
    /// Windowed coefficient correlations against the residue prediction.
    Correlations,
}

fn load(cli: &Cli) -> CliResult<Option<RunConfig>> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => return Ok(None),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(Some(cfg))
}

fn require(cfg: Option<RunConfig>) -> CliResult<RunConfig> {
    cfg.ok_or_else(|| CliError::Config("this command needs --config <file>".into()))
}

fn dispatch(cli: &Cli) -> CliResult<Outcome> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Sieve => commands::cmd_sieve(&require(cfg)?),
        Command::CheckIdentities { count, tolerance } => {
            let dir = cli
                .out
                .clone()
                .or_else(|| cfg.as_ref().map(|c| c.output_dir.clone()))
                .unwrap_or_else(|| PathBuf::from("zratios-out"));
            let seed = cli.seed.or(cfg.as_ref().map(|c| c.seed)).unwrap_or(1);
            commands::cmd_check_identities(&dir, cfg.as_ref(), seed, *count, *tolerance)
        }
        Command::Moments => commands::cmd_moments(&require(cfg)?, cli.no_build, cli.emit_plot_data),
        Command::Ratios => commands::cmd_ratios(&require(cfg)?, cli.emit_plot_data),
        Command::Correlations => commands::cmd_correlations(&require(cfg)?, cli.no_build),
    }
}

/// Runs one command on a dedicated thread pool.
pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder.build()?.install(|| dispatch(cli))
}
