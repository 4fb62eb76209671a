use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use arcspec::error::AppError;
use arcspec::parallel::RayonExec;
use arcspec::{config, runner};

#[derive(Debug, Args)]
struct Common {
    /// Path to the JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Accepted for interface stability; all computations are
    /// deterministic, so the seed is ignored.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Geometry diagnostics: sampled curve table and injectivity report.
    Curve(Common),
    /// Eigenvalues of the 1D comparison operators S and S^N.
    #[command(name = "spectrum-1d")]
    Spectrum1d(Common),
    /// 3D eigenvalues via the Birman-Schwinger root-finder.
    #[command(name = "spectrum-3d")]
    Spectrum3d(Common),
    /// Discrete-spectrum cardinality vs the counting law.
    Count(Common),
    /// Full strong-coupling expansion report.
    Asymptotics {
        #[command(flatten)]
        common: Common,
        /// Exit nonzero when a bracket or decay check fails.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Debug, Parser)]
#[command(name = "arcspec", version, about = "Discrete spectrum of a Schrodinger operator with singular interaction on an arc")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

fn dispatch(cmd: &Cmd) -> (&Common, runner::Subcommand) {
    match cmd {
        Cmd::Curve(c) => (c, runner::Subcommand::Curve),
        Cmd::Spectrum1d(c) => (c, runner::Subcommand::Spectrum1d),
        Cmd::Spectrum3d(c) => (c, runner::Subcommand::Spectrum3d),
        Cmd::Count(c) => (c, runner::Subcommand::Count),
        Cmd::Asymptotics { common, strict } => {
            (common, runner::Subcommand::Asymptotics { strict: *strict })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, sub) = dispatch(&cli.cmd);
    match try_run(common, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn try_run(common: &Common, sub: runner::Subcommand) -> Result<(), AppError> {
    let _ = common.seed;
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| AppError::Config(format!("--threads {t}: {e}")))?;
    }
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| AppError::Config(format!("{}: {e}", common.config.display())))?;
    let cfg = config::parse_config(&text)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let base_dir = common.config.parent().map(|p| p.to_path_buf());
    runner::run(sub, &cfg, &out, base_dir.as_deref(), &RayonExec)
}
