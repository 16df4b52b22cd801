use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gee_core::montecarlo::MRule;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "gee",
    version,
    about = "Generalized error exponents for small-sample uniformity testing"
)]
pub struct Cli {
    /// Leave the timestamp out of the output metadata.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Write the result to FILE instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Boundary of the achievable exponent region as CSV (tau,jf,jm).
    Region(RegionArgs),
    /// Optimal exponent pair at one threshold, as JSON.
    Exponents(ExponentsArgs),
    /// Worst-case bi-uniform alternative and its chi-square functional.
    WorstCase(WorstCaseArgs),
    /// Monte Carlo estimate of both error probabilities for one (n, m).
    Simulate(SimulateArgs),
    /// Monte Carlo error probabilities over a list of sample sizes, as CSV.
    Sweep(SweepArgs),
    /// Exact error probabilities by dynamic programming.
    Oracle(OracleArgs),
    /// Grid certificate for the f-divergence regularity conditions.
    FdivCheck(FdivArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct RegionArgs {
    #[arg(long)]
    pub eps: f64,
    /// Number of boundary points (at least 2).
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ExponentsArgs {
    #[arg(long)]
    pub eps: f64,
    #[command(flatten)]
    pub threshold: TauChoice,
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct TauChoice {
    /// Normalized threshold.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Use the threshold equalizing both exponents.
    #[arg(long)]
    pub equalize: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct WorstCaseArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub eps: f64,
    /// Also minimize over a simplex grid (m <= 6).
    #[arg(long)]
    pub bruteforce: bool,
    /// Grid resolution for --bruteforce.
    #[arg(long, default_value_t = 200)]
    pub mesh: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StatKind {
    Coincidence,
    Pearson,
    PearsonTruncated,
    /// Extended coincidence; weights from --weights.
    Extended,
    /// Weighted coincidence with the uniform reference.
    Weighted,
}

#[derive(Debug, Args, Serialize)]
pub struct StatChoice {
    #[arg(long, value_enum, default_value = "coincidence")]
    pub stat: StatKind,
    /// Extended-coincidence weights v_2,v_3,...
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub weights: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct AlphabetChoice {
    /// Alphabet size.
    #[arg(long)]
    pub m: Option<usize>,
    /// Alphabet size as a function of n: `n^A` or `C*n`.
    #[arg(long, value_parser = parse_m_rule)]
    pub m_rule: Option<MRule>,
}

#[derive(Debug, Args, Serialize)]
pub struct RunChoice {
    /// Number of trials per hypothesis; accepts forms such as 1e6.
    #[arg(long, value_parser = parse_count, default_value = "100000")]
    pub trials: u64,
    #[arg(long, env = "GEE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Number of trial blocks run in parallel; does not affect results.
    #[arg(long, default_value_t = 8)]
    pub streams: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub eps: f64,
    #[command(flatten)]
    pub stat: StatChoice,
    #[command(flatten)]
    pub threshold: TauChoice,
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub alphabet: AlphabetChoice,
    #[command(flatten)]
    pub run: RunChoice,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub eps: f64,
    #[command(flatten)]
    pub stat: StatChoice,
    #[command(flatten)]
    pub threshold: TauChoice,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u64>,
    #[arg(long, value_parser = parse_m_rule, default_value = "n^1.5")]
    pub m_rule: MRule,
    #[command(flatten)]
    pub run: RunChoice,
}

#[derive(Debug, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct OracleThreshold {
    /// Normalized threshold (needs --eps).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Equalizing threshold (needs --eps).
    #[arg(long)]
    pub equalize: bool,
    /// Threshold in statistic units.
    #[arg(long, allow_negative_numbers = true)]
    pub tau_abs: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub stat: StatChoice,
    #[arg(long)]
    pub n: u64,
    #[arg(long)]
    pub m: usize,
    /// Distance of the worst-case alternative; missed detection is reported
    /// only when given.
    #[arg(long)]
    pub eps: Option<f64>,
    #[command(flatten)]
    pub threshold: OracleThreshold,
    /// Largest number of DP cells to attempt.
    #[arg(long, value_parser = parse_count, default_value = "1e8")]
    pub budget: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FdivKind {
    /// x ln x - (x - 1)
    Kl,
    /// (x - 1)^2
    Chi2,
    /// |x - 1| / 2
    TvLike,
}

#[derive(Debug, Args, Serialize)]
pub struct FdivArgs {
    #[arg(long = "f", value_enum)]
    pub f: FdivKind,
    /// Interior points probed for the midpoint condition.
    #[arg(long, default_value_t = 1000)]
    pub midpoint_points: usize,
    /// Right end of the range probed for the quadratic bound.
    #[arg(long, default_value_t = 100.0)]
    pub x_max: f64,
    /// Intervals in [0, x-max].
    #[arg(long, default_value_t = 100_000)]
    pub quadratic_points: usize,
}

fn parse_m_rule(s: &str) -> Result<MRule, String> {
    s.parse().map_err(|e: gee_core::Error| e.to_string())
}

/// Parses a positive count written either as an integer or in float
/// notation with an integral value (`1e6`).
pub fn parse_count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return if v > 0 {
            Ok(v)
        } else {
            Err("must be positive".into())
        };
    }
    let x: f64 = s.parse().map_err(|_| format!("{s:?} is not a count"))?;
    if x >= 1.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
        Ok(x as u64)
    } else {
        Err(format!("{s:?} is not a positive integer"))
    }
}
