mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{Case, ExperimentConfig};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, unreadable or malformed config, environment misuse.
    Usage(String),
    Domain(mirrorforge::Error),
}

impl From<mirrorforge::Error> for Failure {
    fn from(e: mirrorforge::Error) -> Self {
        Failure::Domain(e)
    }
}

#[derive(Parser)]
#[command(name = "mirrorforge", version, about = "Stochastic cantilever mirror models: SFE, cGAN and hybrid")]
struct Cli {
    /// Experiment config (JSON). Defaults apply to anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo ground-truth datasets.
    Generate(GenerateArgs),
    /// Grid-search the stochastic FE model on a dataset's training loads.
    Calibrate(CalibrateArgs),
    /// Train a conditional GAN or the SFE-driven hybrid.
    Train(TrainArgs),
    /// Score any model file (or a dataset) against a dataset.
    Evaluate(EvaluateArgs),
    /// Black-box versus hybrid beyond the training loads.
    Extrapolate(SearchArgs),
    /// Tabulate every report in the report directory.
    Report,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    case: Case,
    /// Overwrite existing files.
    #[arg(long)]
    force: bool,
    /// Linear case: draws per load. Nonlinear case: realizations.
    #[arg(long)]
    count: Option<usize>,
    /// Nonlinear case: softening coefficient of the material law.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, value_enum)]
    case: Case,
    /// Mean modulus candidates as `lo,hi,n`.
    #[arg(long, value_parser = parse_axis)]
    means: Option<Axis>,
    /// Standard deviation candidates, as fractions of the mean, `lo,hi,n`.
    #[arg(long, value_parser = parse_axis)]
    std_fractions: Option<Axis>,
    /// Correlation length candidates as `lo,hi,n`.
    #[arg(long, value_parser = parse_axis)]
    lengths: Option<Axis>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    BlackBox,
    Hybrid,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long)]
    epochs: Option<usize>,
    /// Comma-separated hidden layer sizes to search.
    #[arg(long, value_delimiter = ',')]
    hidden_sizes: Option<Vec<usize>>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    case: Case,
    #[arg(long, value_enum, default_value = "black-box")]
    mode: Mode,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// A trained GAN, an SFE calibration, or a dataset CSV.
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV to score against.
    #[arg(long)]
    data: PathBuf,
    /// Output prefix; defaults to `<report_dir>/evaluate-<model stem>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generated samples per load.
    #[arg(long)]
    samples: Option<usize>,
    /// ε tolerance recorded in the report.
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Axis {
    lo: f64,
    hi: f64,
    n: usize,
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = s.split(',').collect();
    let [lo, hi, n] = parts[..] else {
        return Err("expected `lo,hi,n`".into());
    };
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    let n = n.trim().parse::<usize>().map_err(|e| format!("`{n}`: {e}"))?;
    if n == 0 {
        return Err("need at least one value".into());
    }
    Ok(Axis {
        lo: num(lo)?,
        hi: num(hi)?,
        n,
    })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var("MIRRORFORGE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Usage(format!("MIRRORFORGE_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let mut config = ExperimentConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::Generate(a) => {
            if let Some(n) = a.count {
                match a.case {
                    Case::Linear => config.generate.linear.n_per_load = n,
                    Case::Nonlinear => config.generate.nonlinear.n_realizations = n,
                }
            }
            if let Some(alpha) = a.alpha {
                config.generate.nonlinear.alpha = alpha;
            }
            commands::generate(&config, a.case, a.force)
        }
        Command::Calibrate(a) => {
            let grid = &mut config.calibrate.grid;
            let axis = |a: Axis| mirrorforge::sfem::linspace(a.lo, a.hi, a.n);
            if let Some(x) = a.means {
                grid.means = axis(x);
            }
            if let Some(x) = a.std_fractions {
                grid.std_fractions = axis(x);
            }
            if let Some(x) = a.lengths {
                grid.correlation_lengths = axis(x);
            }
            commands::calibrate(&config, a.case)
        }
        Command::Train(a) => {
            apply_search(&mut config, a.search);
            commands::train(&config, a.case, a.mode == Mode::Hybrid)
        }
        Command::Evaluate(a) => {
            if let Some(n) = a.samples {
                config.evaluate.n_samples = n;
            }
            if let Some(t) = a.tolerance {
                config.evaluate.tolerance = t;
            }
            commands::evaluate(&config, &a.model, &a.data, a.out)
        }
        Command::Extrapolate(s) => {
            apply_search(&mut config, s);
            commands::extrapolate(&config)
        }
        Command::Report => commands::report(&config),
    }
}

fn apply_search(config: &mut ExperimentConfig, search: SearchArgs) {
    if let Some(e) = search.epochs {
        config.train.settings.epochs = e;
    }
    if let Some(h) = search.hidden_sizes {
        config.train.settings.hidden_sizes = h;
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
