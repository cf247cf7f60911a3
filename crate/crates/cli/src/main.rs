//! `fapre` — batch front end for the finite-alphabet precoding toolkit.
//!
//! Subcommands: `gen-data` (labeled channel datasets), `train` (fit the
//! WF-to-optimal network), `sweep` (MI-vs-SNR curves as CSV), `bench`
//! (optimizer vs inference wall-clock), `eval-mi` (one-shot MI evaluation).
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod commands;
mod literal;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "fapre", version, about = "Finite-alphabet MIMO precoding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled dataset of Rayleigh channels.
    GenData(GenDataArgs),
    /// Train the WF-to-optimal precoder network on a dataset file.
    Train(TrainArgs),
    /// Evaluate MI per method over an SNR grid on a fixed channel; CSV out.
    Sweep(SweepArgs),
    /// Time iterative optimization against network inference; CSV out.
    Bench(BenchArgs),
    /// Evaluate MI for an explicit channel/precoder pair.
    EvalMi(EvalMiArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModArg {
    Bpsk,
    Qpsk,
    Qam16,
}

impl ModArg {
    fn constellation(self) -> fapre_core::Constellation {
        use fapre_core::ConstellationKind::*;
        fapre_core::make_constellation(match self {
            ModArg::Bpsk => Bpsk,
            ModArg::Qpsk => Qpsk,
            ModArg::Qam16 => Qam16,
        })
    }
}

/// `eval-mi` additionally accepts `gaussian` for the closed-form rate.
#[derive(Clone, Copy, Debug, ValueEnum)]
enum EvalModArg {
    Bpsk,
    Qpsk,
    Qam16,
    Gaussian,
}

#[derive(Args)]
struct GenDataArgs {
    /// Transmit antennas.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Receive antennas.
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long = "mod", value_enum, default_value_t = ModArg::Bpsk)]
    modulation: ModArg,
    /// Number of samples.
    #[arg(long)]
    count: usize,
    /// SNR grid in dB: `start:step:stop` or a comma list.
    #[arg(long, default_value = "-10:2.5:20", allow_hyphen_values = true)]
    snr_grid: String,
    /// Master seed (falls back to FAPRE_SEED, then 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Noise draws per MI evaluation while labeling.
    #[arg(long, default_value_t = 500)]
    tn: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset file from `gen-data`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1000)]
    epochs: usize,
    #[arg(long, default_value_t = 10)]
    batch: usize,
    #[arg(long, default_value_t = 0.005)]
    lr: f64,
    /// Training fraction of the dataset.
    #[arg(long, default_value_t = 0.7)]
    split: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Channel matrix literal, row-major (`a+bi,c;d,e`).
    #[arg(long = "h", default_value = "2,1;1,1", allow_hyphen_values = true)]
    channel: String,
    #[arg(long = "mod", value_enum, default_value_t = ModArg::Bpsk)]
    modulation: ModArg,
    /// SNR grid in dB.
    #[arg(long = "snr-db", default_value = "-10:2.5:20", allow_hyphen_values = true)]
    snr_db: String,
    /// Comma list from {wf, opt, dl, identity}.
    #[arg(long, default_value = "wf,opt,identity")]
    methods: String,
    /// Model file; required when `dl` is requested.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Noise draws per MI evaluation.
    #[arg(long, default_value_t = 500)]
    tn: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Number of channels to precode.
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long = "mod", value_enum, default_value_t = ModArg::Bpsk)]
    modulation: ModArg,
    /// Trained model file for the inference side.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalMiArgs {
    /// Channel matrix literal, row-major.
    #[arg(long = "h", allow_hyphen_values = true)]
    channel: String,
    /// Precoder matrix literal; `0` expands to the all-zero precoder.
    #[arg(long = "g", allow_hyphen_values = true)]
    precoder: String,
    #[arg(long = "mod", value_enum, default_value_t = EvalModArg::Bpsk)]
    modulation: EvalModArg,
    #[arg(long, default_value_t = 500)]
    tn: usize,
    #[arg(long)]
    seed: Option<u64>,
}

/// Failures split by exit code.
enum CliError {
    /// Bad user input: exit 2.
    Usage(String),
    /// Anything that went wrong while doing the work: exit 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<fapre_core::Error> for CliError {
    fn from(e: fapre_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = Result<T, CliError>;

fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("FAPRE_SEED") {
        Ok(v) => v
            .parse::<u64>()
            .map_err(|e| CliError::Usage(format!("FAPRE_SEED `{v}`: {e}"))),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::GenData(args) => commands::gen_data(args),
        Command::Train(args) => commands::train(args),
        Command::Sweep(args) => commands::sweep(args),
        Command::Bench(args) => commands::bench(args),
        Command::EvalMi(args) => commands::eval_mi(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
