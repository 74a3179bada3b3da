//! Command-line front end: argument parsing, dispatch and exit codes.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lfpp_core::experiments::Outcome;
use lfpp_core::{FieldSource, Point};

mod commands;
pub mod fixture;
mod output;

pub use commands::run;
pub use output::QueryReport;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_WARN: u8 = 3;

/// Rejected before any computation starts; exits with [`EXIT_USAGE`].
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

#[derive(Debug, Parser)]
#[command(
    name = "lfpp",
    version,
    about = "Liouville first passage percolation on a square lattice",
    arg_required_else_help = true,
    after_help = "Exit codes: 0 pass, 1 hard failure or error, 2 usage, 3 statistical warning only."
)]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
}

/// Settings shared by every compute verb; each overrides the config file.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// TOML run configuration
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Root seed; replica seeds are derived from it
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// LFPP parameter xi
    #[arg(long, value_name = "F", conflicts_with = "gamma")]
    pub xi: Option<f64>,
    /// LQG parameter gamma; xi defaults to the midpoint of its enclosure
    #[arg(long, value_name = "F")]
    pub gamma: Option<f64>,
    /// Mollification scale (default: four mesh spacings)
    #[arg(long, value_name = "F")]
    pub eps: Option<f64>,
    /// Nodes per side (a power of two)
    #[arg(long, value_name = "U")]
    pub n: Option<usize>,
    /// Half-width of the square window
    #[arg(long, value_name = "F")]
    pub half_width: Option<f64>,
    #[arg(long, value_name = "U")]
    pub replicas: Option<usize>,
    /// Output directory
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Worker threads (default: available processors)
    #[arg(long, value_name = "U")]
    pub workers: Option<usize>,
    /// Field source: gff, zero, const:C, eps-scaling:K or log-radial:K
    #[arg(long, value_name = "SRC", value_parser = parse_source)]
    pub source: Option<FieldSource>,
}

#[derive(Debug, Clone, Args)]
pub struct AnnulusArgs {
    #[arg(long, value_name = "X,Y", value_parser = parse_point, default_value = "0,0")]
    pub center: Point,
    #[arg(long, value_name = "F", default_value_t = 0.25)]
    pub r1: f64,
    #[arg(long, value_name = "F", default_value_t = 0.5)]
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// Left-right crossing of the unit square (median: a_eps)
    Crossing,
    /// Around-distance of 1 < |z| < 2 (p-quantile: alpha)
    Around,
    /// D(0, (1, 0)) (median: beta)
    Distance,
}

#[derive(Debug, Subcommand)]
pub enum Verb {
    /// Sample field replicas into binary cache files
    #[command(after_help = "CSV columns: replica, seed, kind, file, mean (1), min (1), max (1), center (1)")]
    Sample {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Point-to-point LFPP distance
    #[command(after_help = CSV_QUERY)]
    Distance {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_name = "X,Y", value_parser = parse_point, default_value = "0,0")]
        from: Point,
        #[arg(long, value_name = "X,Y", value_parser = parse_point, default_value = "1,0")]
        to: Point,
        /// Compare against the expected values of an oracle fixture instead of sampling
        #[arg(long, value_name = "PATH")]
        fixture: Option<PathBuf>,
    },
    /// Shortest loop separating the boundaries of an annulus
    #[command(after_help = CSV_QUERY)]
    Around {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        annulus: AnnulusArgs,
        #[arg(long, value_name = "PATH")]
        fixture: Option<PathBuf>,
    },
    /// Distance between the boundary circles of an annulus
    #[command(after_help = CSV_QUERY)]
    Across {
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        annulus: AnnulusArgs,
        #[arg(long, value_name = "PATH")]
        fixture: Option<PathBuf>,
    },
    /// Left-right crossing length of an axis-aligned square
    #[command(after_help = CSV_QUERY)]
    Crossing {
        #[command(flatten)]
        run: RunArgs,
        /// Lower-left corner
        #[arg(long, value_name = "X,Y", value_parser = parse_point, default_value = "0,0")]
        corner: Point,
        #[arg(long, value_name = "F", default_value_t = 1.0)]
        side: f64,
        #[arg(long, value_name = "PATH")]
        fixture: Option<PathBuf>,
    },
    /// Quantile normalizers, at one scale or along the configured eps ladder
    #[command(after_help = "CSV columns: eps (1), replica, seed, value (lfpp)")]
    Estimate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Quantity::Crossing)]
        quantity: Quantity,
        /// Quantile level (default: 0.5, or the configured p for `around`)
        #[arg(long, value_name = "F")]
        quantile: Option<f64>,
    },
    /// Run a named experiment and write its report
    #[command(
        after_help = "CSV columns: arm, replica, seed, then each value column as `name (unit)`.\n\
        Experiments: continuity, euclidean_limit, exponent_scan, xi_infty, annulus_scaling, weyl_check, invariance_check."
    )]
    Experiment {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_name = "NAME")]
        experiment: String,
        /// Experiment parameter; lists are comma-separated or a ladder like 2^-3..2^-7
        #[arg(long = "param", value_name = "KEY=VALUE", value_parser = parse_param)]
        params: Vec<(String, String)>,
        /// Quantile level p of the around-annulus normalizer
        #[arg(long, value_name = "F")]
        quantile: Option<f64>,
    },
    /// Summarize a report file; exits with the report's outcome
    Report {
        path: PathBuf,
        /// Also write the per-replica CSV here
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

const CSV_QUERY: &str = "CSV columns: replica, seed, value (lfpp), relaxations (count).\n\
    With --fixture: case, expected (lfpp), value (lfpp), match (bool).";

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got `{s}`"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{t}` is not a finite number"))
    };
    Ok(Point::new(num(x)?, num(y)?))
}

fn parse_source(s: &str) -> Result<FieldSource, String> {
    s.parse().map_err(|e: lfpp_core::Error| e.to_string())
}

fn parse_param(s: &str) -> Result<(String, String), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got `{s}`"))?;
    if k.trim().is_empty() {
        return Err(format!("empty parameter name in `{s}`"));
    }
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Parses arguments (without the program name).
pub fn parse<I, T>(argv: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Cli::try_parse_from(std::iter::once(OsString::from("lfpp")).chain(argv.into_iter().map(Into::into)))
}

pub fn exit_code(outcome: Outcome) -> u8 {
    match outcome {
        Outcome::Pass => EXIT_PASS,
        Outcome::StatisticalWarn => EXIT_WARN,
        Outcome::Fail => EXIT_FAIL,
    }
}

/// Stable message prefix for an error.
pub fn error_tag(e: &anyhow::Error) -> &'static str {
    if let Some(core) = e.downcast_ref::<lfpp_core::Error>() {
        core.tag()
    } else if e.is::<UsageError>() {
        "usage"
    } else if e.is::<std::io::Error>() {
        "io"
    } else if e.is::<serde_json::Error>() {
        "format"
    } else {
        "internal"
    }
}

fn is_usage(e: &anyhow::Error) -> bool {
    e.is::<UsageError>() || matches!(e.downcast_ref::<lfpp_core::Error>(), Some(lfpp_core::Error::Config(_)))
}

/// Parses, runs and reports; returns the process exit code.
pub fn main_with<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match parse(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.exit_code() == 0 { EXIT_PASS } else { EXIT_USAGE };
        }
    };
    match run(&cli) {
        Ok(outcome) => exit_code(outcome),
        Err(e) => {
            eprintln!("error[{}]: {e:#}", error_tag(&e));
            if is_usage(&e) {
                EXIT_USAGE
            } else {
                EXIT_FAIL
            }
        }
    }
}
