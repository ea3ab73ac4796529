//! `mcrank`: rank candidates by multi-criteria dominance and evaluate top-N
//! recommendations.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Exit status for bad invocations.
const EXIT_USAGE: u8 = 1;
/// Exit status for unreadable or invalid data.
const EXIT_DATA: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mcrank",
    version,
    about = "Multi-criteria ranking and top-N evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Score each user's candidates and print the ranked lists.
    Rank(RankArgs),
    /// Run the cross-validated evaluation and write a report.
    Evaluate(EvaluateArgs),
    /// Evaluate k-dominance over a list of k values.
    SweepK(SweepArgs),
    /// Generate a synthetic multi-criteria ratings file.
    Synth(SynthArgs),
    /// Fit the baseline predictor and dump predicted criteria vectors.
    Predict(PredictArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Pr,
    Kd,
    Ar,
    Mr,
    Gd,
    Pg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SubArg {
    Ar,
    Mr,
    Gd,
    Pg,
}

#[derive(Debug, Args)]
struct RankArgs {
    /// Predicted vectors (`user_id,item_id,<criteria...>`), or a ratings file with --ratings.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Relaxation factor for `kd`, in [0, 1].
    #[arg(long)]
    k: Option<f64>,
    /// Subsort for a hybrid ranking; the method must be `pr` or `kd`.
    #[arg(long, value_enum)]
    sub: Option<SubArg>,
    /// Only rank this user's candidates.
    #[arg(long)]
    user: Option<String>,
    /// Keep only the first N items of each list.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    top_n: Option<u64>,
    /// Input holds pre-computed criteria vectors (the default).
    #[arg(long, conflicts_with = "ratings")]
    predicted: bool,
    /// Input is a ratings file; its observed criteria ratings are ranked.
    #[arg(long)]
    ratings: bool,
    /// Criteria closer than this count as equal in dominance checks.
    #[arg(long, default_value_t = 0.0)]
    equality_tolerance: f64,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Ratings CSV; overrides the dataset named in the config.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; the flattened CSV is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Record wall-clock timings in the report, which makes it differ between runs.
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated k values, e.g. `0,0.25,0.5`.
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<f64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    users: usize,
    #[arg(long)]
    items: usize,
    #[arg(long)]
    criteria: usize,
    #[arg(long)]
    density: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    /// Ratings CSV to train on.
    #[arg(long)]
    input: PathBuf,
    /// Destination for predicted vectors.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also predict the pairs the user already rated.
    #[arg(long)]
    all_pairs: bool,
    /// Also save the trained model parameters here.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

pub(crate) enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

impl From<mcrank_core::Error> for Failure {
    fn from(e: mcrank_core::Error) -> Self {
        Failure::Data(e.into())
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("MCRANK_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().map_err(|_| {
        Failure::Usage(format!(
            "MCRANK_THREADS must be a non-negative integer, got {raw:?}"
        ))
    })?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    match cli.command {
        Command::Rank(a) => commands::rank(&a, &mut out)?,
        Command::Evaluate(a) => commands::evaluate(&a)?,
        Command::SweepK(a) => commands::sweep_k(&a)?,
        Command::Synth(a) => commands::synth(&a)?,
        Command::Predict(a) => commands::predict(&a)?,
    }
    out.flush().map_err(|e| Failure::Data(e.into()))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
