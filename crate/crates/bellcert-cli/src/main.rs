//! Command-line interface for randomness certification of Bell-test
//! behaviors. Every command is deterministic given its flags and seed;
//! floating values are printed at fixed precision so reruns are
//! byte-identical.

mod commands;
mod repro;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exit code for malformed or rejected input (bad flags, unparseable
/// files, signaling behaviors).
pub const EXIT_INPUT: u8 = 2;
/// Exit code for refusing work that exceeds the stated budget.
pub const EXIT_BUDGET: u8 = 3;
/// Exit code for numerical solver failures.
pub const EXIT_SOLVER: u8 = 4;
/// Exit code for a run that completed but whose internal assertions or
/// certifications failed.
pub const EXIT_ASSERT: u8 = 1;

/// A command failure carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<bellcert::Error> for CliError {
    fn from(e: bellcert::Error) -> Self {
        use bellcert::Error as E;
        let code = match &e {
            E::BudgetExceeded(_) => EXIT_BUDGET,
            E::Lp(_) | E::Sdp(_) | E::OptimizerStalled { .. } => EXIT_SOLVER,
            E::CertificationFailed(_) | E::PropagationContradiction(_) => EXIT_ASSERT,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Exact rational arithmetic (required for vertex/zero-count work).
    Rational,
    /// Plain f64 arithmetic.
    Float,
}

#[derive(Parser)]
#[command(
    name = "bellcert",
    version,
    about = "Certify intrinsic randomness of Bell-test behaviors under \
             no-signaling, quantum and supra-quantum correlation sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the universal no-signaling randomness bound 1/(d^N - (d-1)^N).
    Bound {
        /// Scenario as N,M,d (parties, inputs per party, outputs per input).
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Adversarial guessing probability of the outcome at x0 over the
    /// no-signaling set, with the optimal extremal decomposition.
    Guess {
        /// Behavior file (JSON table of p(a|x)).
        #[arg(long)]
        input: PathBuf,
        /// Target input string, one digit per party (e.g. "00").
        #[arg(long)]
        x0: String,
        #[arg(long, value_enum, default_value = "rational")]
        mode: Mode,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Enumerate or sample vertices of the no-signaling polytope with
    /// per-vertex zero counts and the (d-1)^N bound summary.
    Vertices {
        /// Scenario as N,M,d.
        #[arg(long)]
        scenario: String,
        /// Sample seeded random vertices instead of exhaustive enumeration.
        #[arg(long)]
        sample: bool,
        /// RNG seed for sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Enumeration: polytope dimension limit (default 16).
        /// Sampling: number of seeded trials (default 500).
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Symmetry certificate that all outcomes at x0 are equally likely at
    /// the (assumed unique) maximal violation of a parity Bell inequality.
    CertifySymmetry {
        /// Use the built-in parity inequality family on N parties.
        #[arg(long, conflicts_with = "input")]
        parties: Option<usize>,
        /// Or load an inequality from a JSON file.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Target input string (default 1...10).
        #[arg(long)]
        x0: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Moment-matrix relaxation of the tripartite Mermin scenario: optimum
    /// of every outcome probability per epsilon with extrapolation,
    /// single-party expectations, and the analytic reference comparison.
    NpaMermin {
        /// Epsilon schedule for the relaxed Mermin constraint.
        #[arg(long, value_delimiter = ',', default_values_t = [1e-4, 1e-6, 1e-8])]
        eps: Vec<f64>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run the full claim-reproduction suite and emit a markdown report
    /// with one pass/fail line per claim.
    Repro {
        /// Write the report to a file instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// RNG seed for the randomized checks.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Parse "N,M,d" into a scenario.
pub fn parse_scenario(s: &str) -> CliResult<bellcert::Scenario> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(CliError::input(format!(
            "scenario must be N,M,d (three comma-separated integers), got {s:?}"
        )));
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::input(format!("bad scenario component {p:?}")))
        })
        .collect::<CliResult<_>>()?;
    Ok(bellcert::Scenario::new(nums[0], nums[1], nums[2])?)
}

/// Parse an input string like "010" into per-party digits.
pub fn parse_digits(s: &str) -> CliResult<Vec<usize>> {
    s.chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as usize)
                .ok_or_else(|| CliError::input(format!("input string {s:?} must be digits")))
        })
        .collect()
}

/// Fixed-precision float rendering so reruns are byte-identical.
pub fn fmt_f64(v: f64) -> String {
    // Normalize negative zero so formatting is sign-stable.
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.9}")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bound { scenario, format } => commands::cmd_bound(&scenario, format),
        Command::Guess {
            input,
            x0,
            mode,
            format,
        } => commands::cmd_guess(&input, &x0, mode, format),
        Command::Vertices {
            scenario,
            sample,
            seed,
            budget,
            format,
        } => commands::cmd_vertices(&scenario, sample, seed, budget, format),
        Command::CertifySymmetry {
            parties,
            input,
            x0,
            format,
        } => commands::cmd_certify_symmetry(parties, input.as_deref(), x0.as_deref(), format),
        Command::NpaMermin { eps, format } => commands::cmd_npa_mermin(&eps, format),
        Command::Repro { output, seed } => repro::cmd_repro(output.as_deref(), seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
