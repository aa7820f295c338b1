use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use classifim::{Error, PairBudget};

mod commands;
mod manifest;

/// Schema versions of every file format the tool reads or writes.
fn version_line() -> String {
    format!(
        "classifim {} (schemas: dataset v{}, model v{}, manifest v{})",
        env!("CARGO_PKG_VERSION"),
        classifim::dataset::FORMAT_VERSION,
        classifim::classifier::MODEL_VERSION,
        manifest::MANIFEST_VERSION,
    )
}

#[derive(Debug, Parser)]
#[command(name = "classifim", about = "Fisher information estimation by binary classification")]
#[command(disable_version_flag = true)]
pub struct Cli {
    /// Print the version and file schema versions.
    #[arg(long, short = 'V')]
    version: bool,
    /// Worker threads for internal parallelism; 1 gives reproducible single-threaded runs.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a dataset from a built-in manifold and export its exact FIM.
    Generate(GenerateArgs),
    /// Train the ClassiFIM classifier on a dataset.
    Train(TrainArgs),
    /// Estimate the FIM at every grid point with a trained model.
    Estimate(EstimateArgs),
    /// Score a predicted FIM against the truth, or compare two sets of reports.
    Evaluate(EvaluateArgs),
    /// Run a comparison method.
    Baseline(BaselineArgs),
    /// Locate FIM peaks in a prediction and score them against the truth.
    Peaks(PeaksArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// bernoulli1d, bernoulli2d, sigmoid_step1d or ising_chain1d.
    #[arg(long)]
    pub sm: String,
    #[arg(long)]
    pub n_bits: usize,
    /// Grid sizes, one per parameter: `L` or `L0,L1`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub grid: Vec<usize>,
    #[arg(long)]
    pub samples_per_point: usize,
    /// Steepness of sigmoid_step1d.
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Exact FIM CSV.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args, Clone)]
pub struct SplitArgs {
    /// Hold out this fraction of each grid point's rows; train on the rest.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub max_lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',', default_value = "64,64")]
    pub arch: Vec<usize>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, required_unless_present = "compare")]
    pub pred: Option<PathBuf>,
    #[arg(long, required_unless_present = "compare")]
    pub truth: Option<PathBuf>,
    /// `all` or a number of sampled grid-point pairs.
    #[arg(long, value_parser = parse_pairs)]
    pub pairs: Option<PairBudget>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Two report files (a JSON report or an array of them, one per seed).
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with_all = ["pred", "truth"])]
    pub compare: Option<Vec<PathBuf>>,
    /// Decimal places for the `value(std)` strings; derived from the std when absent.
    #[arg(long)]
    pub decimals: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_pairs(s: &str) -> Result<PairBudget, String> {
    match s.parse::<PairBudget>() {
        Ok(PairBudget::Count(0)) => Err("pair count must be positive".into()),
        other => other.map_err(|e| e.to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Const,
    Best,
    Naive,
    Spca,
    Modw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Heads {
    Shared,
    Independent,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub method: Method,
    /// Source of the manifold, grid and samples.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Exact FIM CSV; required by the peak methods (spca, modw).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Scale of the constant metric.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub axis: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = classifim::baselines::DEFAULT_TAU)]
    pub tau: f64,
    #[arg(long, default_value_t = classifim::baselines::DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Embedding CSV written by spca.
    #[arg(long)]
    pub embedding: Option<PathBuf>,
    #[arg(long, default_value_t = classifim::peaks::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, value_delimiter = ',', default_value = "32")]
    pub arch: Vec<usize>,
    #[arg(long, value_enum, default_value = "shared")]
    pub heads: Heads,
    #[arg(long, default_value_t = classifim::peaks::DEFAULT_PROMINENCE_FRAC)]
    pub prominence_frac: f64,
    /// Border margin for truth peaks; `auto` is one grid spacing.
    #[arg(long, default_value = "auto")]
    pub border_margin: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PeaksArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub axis: usize,
    #[arg(long, default_value_t = classifim::peaks::DEFAULT_SIGMA)]
    pub sigma: f64,
    #[arg(long, default_value_t = classifim::peaks::DEFAULT_PROMINENCE_FRAC)]
    pub prominence_frac: f64,
    /// Border margin for truth peaks; `auto` is one grid spacing.
    #[arg(long, default_value = "auto")]
    pub border_margin: String,
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let summary: Vec<&str> = message
                .lines()
                .map(str::trim)
                .take_while(|l| !l.starts_with("Usage:"))
                .filter(|l| !l.is_empty())
                .collect();
            eprintln!("error[usage]: {}", summary.join(" ").trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    if cli.version {
        println!("{}", version_line());
        return ExitCode::SUCCESS;
    }
    let Some(command) = cli.command else {
        eprintln!("error[usage]: no subcommand given; see --help");
        return ExitCode::from(2);
    };
    if cli.threads == 0 {
        eprintln!("error[invalid-argument]: --threads must be at least 1");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
        eprintln!("error[threads]: {e}");
        return ExitCode::from(2);
    }
    match commands::run(command, cli.threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.tag(), e.to_string().replace('\n', " "));
            ExitCode::from(exit_code(&e))
        }
    }
}
