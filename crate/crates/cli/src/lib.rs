//! The `bshap` command line.
//!
//! [`run`] parses arguments, executes one subcommand and maps the outcome
//! to an exit code: 0 on success, 1 for bad input or usage, 2 for internal
//! failures (including panics).

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

/// Marks an error as a fault of the tool rather than of its input.
#[derive(Debug)]
pub struct Internal(pub String);

impl std::fmt::Display for Internal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "internal error: {}", self.0)
    }
}

impl std::error::Error for Internal {}

#[derive(Debug, Parser)]
#[command(
    name = "bshap",
    version,
    about = "Baseline-Shapley explanations of adverse credit decisions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Inputs shared by every subcommand.
#[derive(Debug, Clone, Args)]
struct Common {
    /// TOML run configuration; command-line flags override its values
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Model file: model-spec DSL (.bshap-model) or a JSON model document (.json)
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Feature-space JSON (names, monotone directions, mutability); inferred
    /// from a DSL model when omitted
    #[arg(long, value_name = "FILE")]
    space: Option<PathBuf>,
    /// Dataset CSV with a header row; an optional `y` column holds labels
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Decision threshold: accept when p(x) <= tau [default: 0.25]
    #[arg(long)]
    tau: Option<f64>,
    /// Seed for every stochastic step [default: 0]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Attribute f(x^D) - f(x^A) to features or groups
    Explain(ExplainArgs),
    /// Score rows and report accept/decline
    Decide(DecideArgs),
    /// Materialize the reference point x^A
    Reference(ReferenceArgs),
    /// Probe monotonicity and continuity
    Check(CheckArgs),
    /// One-dimensional partial dependence as CSV
    Pdp(PdpArgs),
    /// Permutation importance (AUC drop), optionally grouped
    Importance(ImportanceArgs),
    /// Generate a synthetic labelled dataset from a ground-truth model
    Synth(SynthArgs),
    /// Parse a model file, round-trip it and report its structure
    ValidateSpec(ValidateArgs),
}

#[derive(Debug, Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: Common,
    /// CSV of declined applicants to explain (header row, one applicant per row)
    #[arg(long, value_name = "FILE", conflicts_with = "batch")]
    declined: Option<PathBuf>,
    /// Explain every declined row of --data
    #[arg(long)]
    batch: bool,
    /// Reference policy: percentile[:q], nearest, nearest-mutable or fixed:FILE [default: percentile:0.75]
    #[arg(long)]
    policy: Option<String>,
    /// Attribution units, e.g. "balance=x1,x4;age=x2;inq=x9,x10"; must cover every feature
    #[arg(long)]
    groups: Option<String>,
    /// Decompose the link-space score (link) or the probability (probability) [default: link]
    #[arg(long, value_name = "SPACE")]
    attribution_space: Option<String>,
    /// Output format: json, csv or markdown [default: markdown]
    #[arg(long)]
    format: Option<String>,
    /// After the reports, tally how often each unit is the top-1 and top-2 reason
    #[arg(long)]
    summary: bool,
}

#[derive(Debug, Args)]
struct DecideArgs {
    #[command(flatten)]
    common: Common,
    /// CSV of applicants to score [default: --data]
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReferenceArgs {
    #[command(flatten)]
    common: Common,
    /// Reference policy: percentile[:q], nearest, nearest-mutable or fixed:FILE [default: percentile:0.75]
    #[arg(long)]
    policy: Option<String>,
    /// Declined applicant (first row of this CSV), needed by the nearest policies
    #[arg(long, value_name = "FILE")]
    declined: Option<PathBuf>,
    /// Output format: csv or json [default: csv]
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Probing range "lo:hi" for every feature; defaults to the observed ranges in --data
    #[arg(long, value_name = "LO:HI")]
    range: Option<String>,
    /// Grid points per probe line
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Random probe lines per feature
    #[arg(long, default_value_t = 256)]
    probes: usize,
    /// Continuity step as a fraction of each feature's range
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Link-space jump above which a feature is reported discontinuous
    #[arg(long, default_value_t = 0.05)]
    jump_threshold: f64,
    /// Output format: text or json [default: text]
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct PdpArgs {
    #[command(flatten)]
    common: Common,
    /// Feature name
    #[arg(long)]
    feature: String,
    /// Number of grid values across the observed range
    #[arg(long, default_value_t = 32)]
    grid: usize,
}

#[derive(Debug, Args)]
struct ImportanceArgs {
    #[command(flatten)]
    common: Common,
    /// Permute these groups jointly, e.g. "inq=x9,x10;rest=x1,x2"
    #[arg(long)]
    groups: Option<String>,
    /// Permutations per unit
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Output format: text or json [default: text]
    #[arg(long)]
    format: Option<String>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Number of rows
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// JSON file with a K x K lower-triangular mixing matrix for correlated features
    #[arg(long, value_name = "FILE")]
    mixing: Option<PathBuf>,
    /// Write the CSV here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Model file to validate
    file: PathBuf,
    /// Feature-space JSON; inferred from the model text when omitted
    #[arg(long, value_name = "FILE")]
    space: Option<PathBuf>,
    /// Print the canonical serialization
    #[arg(long)]
    print: bool,
    /// Seed for the round-trip probe points [default: 0]
    #[arg(long)]
    seed: Option<u64>,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    EXIT_INPUT
                }
            };
        }
    };
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        commands::dispatch(cli.command, stdout, stderr)
    }));
    match outcome {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            let internal = e.downcast_ref::<Internal>().is_some();
            let _ = writeln!(stderr, "error: {e:#}");
            if internal {
                EXIT_INTERNAL
            } else {
                EXIT_INPUT
            }
        }
        Err(_) => {
            let _ = writeln!(stderr, "error: internal failure (panic)");
            EXIT_INTERNAL
        }
    }
}
