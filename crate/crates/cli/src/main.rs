//! `latsec`: batch front-end for the lattice secrecy experiments.
//!
//! Every subcommand writes one table (CSV or JSON) to `--out` or stdout.
//! Exit status is 2 for a bad configuration and 1 when a checked invariant
//! fails; the table is still written in the latter case.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latsec::channel::DecodeMode;
use latsec::lattice::Sign;

#[derive(Debug, Parser)]
#[command(name = "latsec", version, about = "Strong-secrecy experiments with nested lattice codes")]
pub struct Cli {
    /// Top-level seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Upper bound on any single exhaustive enumeration.
    #[arg(long, global = true, default_value_t = latsec::error::DEFAULT_CAP)]
    pub cap: u128,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignArg {
    Plus,
    Minus,
}

impl From<SignArg> for Sign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => Sign::Plus,
            SignArg::Minus => Sign::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecodeArg {
    Marginal,
    Genie,
}

impl From<DecodeArg> for DecodeMode {
    fn from(d: DecodeArg) -> Self {
        match d {
            DecodeArg::Marginal => DecodeMode::Marginal,
            DecodeArg::Genie => DecodeMode::Genie,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Side-information bounds on random joints and on an exact simplex grid.
    EntropyCheck(EntropyCheckArgs),
    /// Exact equivocation left by the real sum of two codewords.
    LatticeVerify(LatticeVerifyArgs),
    /// Full-rank statistics of uniform GF(q) matrices.
    HashBench(HashBenchArgs),
    /// Exhaustive hashed entropy against the privacy amplification bound.
    Amplify(AmplifyArgs),
    /// Key generation protocol runs and exact key equivocation.
    Keygen(KeygenArgs),
    /// Hashed-encoder transmissions: leakage, decoding error and power.
    Simulate(SimulateArgs),
    /// Exact leakage of the selected encoder against blocklength.
    LeakageTrend(LeakageTrendArgs),
    /// Secure degrees of freedom over a grid of cross gains.
    Sdof(SdofArgs),
}

#[derive(Debug, Args)]
pub struct EntropyCheckArgs {
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Largest |X| and |T| of the random joints.
    #[arg(long, default_value_t = 8)]
    pub max_support: usize,
    /// Mass denominator of the exact grid (0 skips the grid).
    #[arg(long, default_value_t = 8)]
    pub grid_denominator: u64,
    /// Largest |X| and |T| on the grid.
    #[arg(long, default_value_t = 4)]
    pub grid_support: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
    pub s: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct LatticeVerifyArgs {
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub m: u32,
    /// Coarse scale (defaults to m, i.e. unit fine spacing).
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    /// Draw both dithers from the seed instead of using zero.
    #[arg(long)]
    pub random_dither: bool,
}

#[derive(Debug, Args)]
pub struct HashBenchArgs {
    #[arg(long, default_value_t = 2)]
    pub q: u32,
    #[arg(long, default_value_t = 3)]
    pub rmax: usize,
    #[arg(long, default_value_t = 5)]
    pub nmax: usize,
    #[arg(long, default_value_t = 8)]
    pub mc_r: usize,
    #[arg(long, default_value_t = 16)]
    pub mc_n: usize,
    /// Monte-Carlo draws (0 skips the Monte-Carlo row).
    #[arg(long, default_value_t = 100_000)]
    pub mc_draws: usize,
}

#[derive(Debug, Args)]
pub struct AmplifyArgs {
    /// Input length N in bits.
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub rmax: usize,
    /// Extra random sources besides the flat ones.
    #[arg(long, default_value_t = 16)]
    pub random_sources: usize,
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long, default_value_t = 4)]
    pub m: u32,
    /// Coarse scale of the first layer.
    #[arg(long, default_value_t = 4.0)]
    pub scale: f64,
    /// Cross gain √(ab) at receiver 1 (b = 1).
    #[arg(long, default_value_t = 1.1)]
    pub sqrt_ab: f64,
    /// Noise standard deviation σ₁ at receiver 1.
    #[arg(long, default_value_t = 1e-6)]
    pub sigma1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Power budget of both nodes (defaults to the exact expected power).
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    pub sign: SignArg,
    #[arg(long, value_enum, default_value_t = DecodeArg::Marginal)]
    pub decode: DecodeArg,
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    /// Per-layer dimension N.
    #[arg(long = "N", default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub r: usize,
    #[arg(long, default_value_t = 8)]
    pub seed_bits: usize,
    #[arg(long, default_value_t = 1.0)]
    pub seed_rate: f64,
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    /// Also write every transcript as JSON to this file.
    #[arg(long)]
    pub transcripts: Option<PathBuf>,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, default_value_t = 0.3)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Largest hash family averaged exhaustively.
    #[arg(long, default_value_t = 1 << 16)]
    pub family_cap: u128,
    #[arg(long, default_value_t = 256)]
    pub family_samples: usize,
    #[arg(long, default_value_t = 4096)]
    pub max_trials: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Range `lo:hi` (inclusive) or a single value. Decoding is exhaustive,
    /// so keep the codebook small.
    #[arg(long = "Nbar", default_value = "2:4")]
    pub nbar: String,
    #[command(flatten)]
    pub rate: RateArgs,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[command(flatten)]
    pub link: LinkArgs,
}

#[derive(Debug, Args)]
pub struct LeakageTrendArgs {
    #[arg(long, default_value_t = 1)]
    pub layers: usize,
    #[arg(long, default_value_t = 4)]
    pub m: u32,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    pub sign: SignArg,
    /// Range `lo:hi` (inclusive) or a single value.
    #[arg(long = "Nbar", default_value = "2:8")]
    pub nbar: String,
    #[command(flatten)]
    pub rate: RateArgs,
    /// Treat a leakage column that is not strictly decreasing as a failure.
    #[arg(long)]
    pub require_decreasing: bool,
}

#[derive(Debug, Args)]
pub struct SdofArgs {
    /// `start:end:step` of √(ab).
    #[arg(long, default_value = "1.0:3.0:0.01")]
    pub grid: String,
    #[arg(long, default_value_t = 10)]
    pub qmax: u64,
}

/// Why a run did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration (exit 2).
    Usage(String),
    /// A checked invariant did not hold (exit 1).
    Violation(Vec<String>),
}

impl From<latsec::Error> for Failure {
    fn from(e: latsec::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Violation(report)) => {
            for line in &report {
                eprintln!("violation: {line}");
            }
            ExitCode::from(1)
        }
    }
}
