//! Config-driven experiments on anisotropic Hardy-Lorentz norms: square
//! function equivalences, vector-valued maximal bounds, reproducing-formula
//! residuals and atomic decomposition checks.

pub mod config;
pub mod error;
pub mod family;
pub mod output;
pub mod studies;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
use studies::StudyOutcome;

#[derive(Debug, Parser)]
#[command(
    name = "anilp",
    version,
    about = "Anisotropic Hardy-Lorentz experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Pairwise ratios of the S, g, g*_λ and dictionary maximal norms.
    Equiv(CommonArgs),
    /// Vector-valued Hardy-Littlewood ratios over growing families.
    Fs(CommonArgs),
    /// Reproducing-formula residuals over truncation and grid size.
    Frame(CommonArgs),
    /// Validate an atomic decomposition file.
    Atoms(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (defaults to the config's `output`, then `.`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Exit status of a finished run.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_RATIO_FAILURE: i32 = 1;

/// Runs one study and writes its outputs; returns the paths written and the pass flag.
pub fn execute(command: &Command) -> CliResult<(PathBuf, PathBuf, bool)> {
    let (kind, args) = match command {
        Command::Equiv(a) => ("equiv", a),
        Command::Fs(a) => ("fs", a),
        Command::Frame(a) => ("frame", a),
        Command::Atoms(a) => ("atoms", a),
    };
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let out = args
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(|o| base.join(o)))
        .unwrap_or_else(|| PathBuf::from("."));
    let jobs = args.jobs.unwrap_or(0);
    if args.jobs == Some(0) {
        return Err(CliError::ConfigInvalid("--jobs must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::ConfigInvalid(format!("thread pool: {e}")))?;
    let outcome: StudyOutcome = pool.install(|| match kind {
        "equiv" => studies::equiv::run_equivalence_study(&cfg),
        "fs" => studies::fs::run_fs_study(&cfg),
        "frame" => studies::frame::run_frame_study(&cfg),
        _ => studies::atoms::run_atoms_study(&cfg, &base),
    })?;
    let name = format!("{}-{kind}", cfg.name);
    let (csv, json) = output::write_outputs(&out, &name, &outcome.table, &outcome.summary)?;
    Ok((csv, json, outcome.passed))
}

/// Maps a parsed command to its process exit code, reporting on stderr.
pub fn run(cli: Cli) -> i32 {
    match execute(&cli.command) {
        Ok((csv, _, passed)) => {
            eprintln!("wrote {}", csv.display());
            if passed {
                EXIT_PASS
            } else {
                eprintln!("some ratios fall outside the acceptance interval");
                EXIT_RATIO_FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
