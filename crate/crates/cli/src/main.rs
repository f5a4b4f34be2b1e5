use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparse_parity::cover::DEFAULT_COVER_BUDGET;
use sparse_parity::harness::{self, BenchConfig, InnerKind, NoiselessConfig, NoisyConfig, OutputFormat};
use sparse_parity::noisy::DEFAULT_FLIP_BUDGET;
use sparse_parity::oracle::read_stream;
use sparse_parity::Error;

/// Sparse parity learners and experiment runner.
#[derive(Parser, Debug)]
#[command(name = "sparse-parity", version, arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Root seed; trial i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    trials: u64,
    /// csv or json.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the subspace-cover online learner on noiseless uniform examples.
    LearnNoiseless {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 2)]
        alpha: usize,
        /// Per-trial example cap (default 10n + 100).
        #[arg(long)]
        max_samples: Option<u64>,
        /// Run through the PAC conversion with this confidence parameter.
        #[arg(long)]
        delta: Option<f64>,
        /// Replay examples from a stream file instead of drawing them.
        #[arg(long, conflicts_with = "delta")]
        stream: Option<PathBuf>,
    },
    /// Learn a sparse parity from noisy labels by enumerating flip sets.
    LearnNoisy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        delta: f64,
        /// mitm or online.
        #[arg(long, default_value = "mitm")]
        inner: String,
        /// Cover parameter for `--inner online`.
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 2)]
        alpha: usize,
        /// Override the inner learner's declared sample complexity.
        #[arg(long)]
        inner_samples: Option<u64>,
        /// Refuse runs needing more inner invocations than this.
        #[arg(long, default_value_t = DEFAULT_FLIP_BUDGET)]
        flip_budget: u64,
    },
    /// Draw one covering family and certify it exhaustively.
    CoverCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = 2)]
        alpha: usize,
        /// Largest C(T,k) to enumerate.
        #[arg(long, default_value_t = DEFAULT_COVER_BUDGET)]
        budget: u64,
    },
    /// Samples/charts/time tradeoff over a grid of t.
    Bench {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        alpha: usize,
        /// Comma-separated t values, e.g. 16,8.
        #[arg(long, value_delimiter = ',', required = true)]
        t_grid: Vec<usize>,
        #[arg(long)]
        max_samples: Option<u64>,
    },
}

fn open_out(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> sparse_parity::Result<()> {
    match cli.command {
        Command::LearnNoiseless {
            common,
            n,
            k,
            t,
            alpha,
            max_samples,
            delta,
            stream,
        } => {
            let format = common.format.unwrap_or(OutputFormat::Csv);
            let report = match stream {
                Some(path) => {
                    let (len, examples) = read_stream(BufReader::new(File::open(path)?))?;
                    if len != n && !examples.is_empty() {
                        return Err(Error::LengthMismatch { expected: n, found: len });
                    }
                    let (row, found) = harness::run_noiseless_replay(examples, n, k, t, alpha, common.seed)?;
                    if let Some(x) = found {
                        eprintln!("identified {x}");
                    }
                    harness::RunReport { rows: vec![row] }
                }
                None => harness::run_noiseless(&NoiselessConfig {
                    n,
                    k,
                    t,
                    alpha,
                    trials: common.trials,
                    seed: common.seed,
                    max_samples,
                    delta,
                })?,
            };
            let mut out = open_out(&common.out)?;
            report.write(format, &mut out)?;
            out.flush()?;
        }
        Command::LearnNoisy {
            common,
            n,
            k,
            eta,
            delta,
            inner,
            t,
            alpha,
            inner_samples,
            flip_budget,
        } => {
            let inner = match (inner.as_str(), t) {
                ("mitm", _) => InnerKind::Mitm,
                ("online", Some(t)) => InnerKind::Online { t, alpha },
                ("online", None) => return Err(Error::InvalidParams("--inner online needs --t".into())),
                (other, _) => {
                    return Err(Error::InvalidParams(format!(
                        "unknown inner learner `{other}` (expected mitm or online)"
                    )))
                }
            };
            let report = harness::run_noisy(&NoisyConfig {
                n,
                k,
                eta,
                delta,
                inner,
                trials: common.trials,
                seed: common.seed,
                inner_samples,
                flip_budget,
            })?;
            let mut out = open_out(&common.out)?;
            report.write(common.format.unwrap_or(OutputFormat::Csv), &mut out)?;
            out.flush()?;
        }
        Command::CoverCheck {
            common,
            n,
            k,
            t,
            alpha,
            budget,
        } => {
            if common.format == Some(OutputFormat::Csv) {
                return Err(Error::InvalidParams("cover-check only writes json".into()));
            }
            let family = harness::cover_check(n, k, t, alpha, common.seed, budget)?;
            let mut out = open_out(&common.out)?;
            writeln!(out, "{}", family.to_json())?;
            out.flush()?;
        }
        Command::Bench {
            common,
            n,
            k,
            alpha,
            t_grid,
            max_samples,
        } => {
            let points = harness::bench_tradeoff(&BenchConfig {
                n,
                k,
                alpha,
                t_grid,
                trials: common.trials,
                seed: common.seed,
                max_samples,
            })?;
            let rows: Vec<_> = points.into_iter().map(|p| p.row).collect();
            let mut out = open_out(&common.out)?;
            harness::write_rows(&rows, common.format.unwrap_or(OutputFormat::Csv), &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
