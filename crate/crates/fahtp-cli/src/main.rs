mod csvio;
mod errors;
mod experiment;
mod fit;
mod plot;
mod scenario;
mod seeds;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use errors::{CliError, Result};

#[derive(Parser)]
#[command(
    name = "fahtp",
    version,
    about = "Sparse regression by hard thresholding pursuit with tuning-free model-size selection"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one dataset from CSV files; writes fit_summary.csv and fit_coefficients.csv.
    Fit(FitArgs),
    /// Run a seeded replication study; writes results, summaries, figures and a manifest.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Design matrix CSV, one row per observation.
    x: PathBuf,
    /// Response CSV, a single column.
    y: PathBuf,
    /// Largest model size on the path; default n/(2 log max(p/n, 2)), capped at n/2 and p.
    #[arg(long = "s-max")]
    s_max: Option<usize>,
    /// Ratio threshold of the second-stage scan; must exceed 1.
    #[arg(long, default_value_t = fahtp::DEFAULT_KAPPA)]
    kappa: f64,
    /// Penalty constant of the information criterion.
    #[arg(long = "k-const", default_value_t = fahtp::DEFAULT_K_CONST)]
    k_const: f64,
    /// Iteration cap per model size.
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    /// Skip a header row in both input files.
    #[arg(long)]
    header: bool,
    /// Trust the input scaling; skip rescaling columns to norm sqrt(n).
    #[arg(long = "no-normalize")]
    no_normalize: bool,
    /// Hold out this fraction of rows (0 < f < 1) for a test error.
    #[arg(long)]
    split: Option<f64>,
    /// Seed for the holdout draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// min_signal_path, adaptive_benefit or sample_size_sweep; optional when --config names one.
    name: Option<String>,
    /// TOML file overriding the built-in defaults (flags still win).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replications per sweep point.
    #[arg(long)]
    replications: Option<usize>,
    /// Base seed; each (sweep point, replication) derives its own stream from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Largest model size on the path.
    #[arg(long = "s-max")]
    s_max: Option<usize>,
    /// Ratio threshold of the second-stage scan; must exceed 1.
    #[arg(long)]
    kappa: Option<f64>,
    /// Penalty constant of the information criterion.
    #[arg(long = "k-const")]
    k_const: Option<f64>,
    /// Iteration cap per model size.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
    /// Run every size for exactly this many iterations instead of stopping early.
    #[arg(long = "fixed-iters")]
    fixed_iters: Option<usize>,
    /// Worker threads; defaults to all cores. Results do not depend on this.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; defaults to the experiment name.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => {
            let opts = fit::FitOptions {
                header: a.header,
                no_normalize: a.no_normalize,
                s_max: a.s_max,
                kappa: a.kappa,
                k_const: a.k_const,
                max_iter: a.max_iter,
                split: a.split,
                seed: a.seed,
                out: a.out,
            };
            fit::cmd_fit(&a.x, &a.y, &opts)
        }
        Command::Experiment(a) => {
            if a.jobs == Some(0) {
                return Err(CliError::usage("jobs must be at least 1"));
            }
            let config = a.config.as_deref().map(scenario::load_config).transpose()?;
            let flags = scenario::FlagOverrides {
                replications: a.replications,
                base_seed: a.seed,
                output_dir: a.out,
                s_max: a.s_max,
                kappa: a.kappa,
                k_const: a.k_const,
                max_iter: a.max_iter,
                fixed_iters: a.fixed_iters,
            };
            let spec = scenario::resolve(a.name.as_deref(), config.as_ref(), &flags)?;
            experiment::run(&spec, a.jobs)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
