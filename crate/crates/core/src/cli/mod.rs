//! Command-line front end.

mod commands;
mod spec;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{correlation_matrix, CorrelationMatrix};
pub use spec::ModelSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "psr-kit",
    version,
    about = "Probability-scale residuals, residual diagnostics and covariate-adjusted rank correlation",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct Input {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Column declarations, e.g. `stage:ordinal(0<1<2<3<4),id:id,t:surv(time,dead)`.
    /// `@path` reads them from a file. Undeclared numeric columns are continuous.
    #[arg(long, default_value = "")]
    schema: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit a model and print a JSON summary.
    Fit {
        #[command(flatten)]
        input: Input,
        /// Model spec, e.g. `orm-logit(y ~ age + rcs(bmi,3))`.
        #[arg(long)]
        model: String,
        /// Nested smaller model for a likelihood-ratio test.
        #[arg(long)]
        reduced: Option<String>,
        /// Also print the fitted distribution of this row (id column value, or 1-based line number).
        #[arg(long, value_name = "ROW")]
        dump_dist: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write one probability-scale residual per analysed row.
    Psr {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        model: String,
        /// Add the normal-transformed residual column.
        #[arg(long)]
        normal: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residual QQ and residual-by-predictor plots, plus a uniformity test.
    Diag {
        #[command(flatten)]
        input: Input,
        #[arg(long, alias = "model")]
        fit_spec: String,
        /// QQ plot against Uniform(-1, 1).
        #[arg(long, value_name = "PATH")]
        qq: Option<PathBuf>,
        /// Residual-by-predictor plot, `name=path`; repeatable.
        #[arg(long, value_name = "NAME=PATH")]
        rbp: Vec<String>,
        /// Write plot data as CSV instead of SVG.
        #[arg(long)]
        csv: bool,
    },
    /// Partial (or conditional) Spearman correlation of two variables given covariates.
    Pcor {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Covariate terms, comma or `+` separated.
        #[arg(long, default_value = "")]
        z: String,
        #[arg(long, default_value = "orm-logit")]
        x_model: String,
        #[arg(long, default_value = "orm-logit")]
        y_model: String,
        /// `correlation` or `covariance` (mean product of residuals).
        #[arg(long, default_value = "correlation")]
        statistic: String,
        /// Condition on this column instead of adjusting: per level, or kernel-smoothed if continuous.
        #[arg(long)]
        given: Option<String>,
        /// Kernel bandwidth for a continuous `--given`; `auto` is Silverman's rule.
        #[arg(long, default_value = "auto")]
        bandwidth: String,
        #[arg(long, default_value_t = 1000)]
        boot: usize,
        #[arg(long, default_value_t = 1000)]
        perm: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Partial Spearman of one outcome with many predictors.
    Scan {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "")]
        z: String,
        /// CSV of predictor columns, one row per data row, same order.
        #[arg(long)]
        predictors: PathBuf,
        #[arg(long, default_value = "")]
        predictor_schema: String,
        #[arg(long, default_value = "linear-empirical")]
        y_model: String,
        #[arg(long, default_value = "orm-logit")]
        x_model: String,
        #[arg(long, default_value_t = 1000)]
        perm: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Correlation matrix: unadjusted above the diagonal, adjusted for `--z` below.
    Corrmat {
        #[command(flatten)]
        input: Input,
        /// Variables, comma separated.
        #[arg(long)]
        vars: String,
        #[arg(long, default_value = "")]
        z: String,
        #[arg(long, default_value = "orm-logit")]
        model: String,
        #[arg(long, default_value_t = 1000)]
        perm: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Companion matrix of permutation p-values.
        #[arg(long)]
        p_out: Option<PathBuf>,
    },
}

/// Runs the command line `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() || e.kind() == clap::error::ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                EXIT_USER
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) if broken_pipe(&e) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USER
            }
        }
    }
}

fn broken_pipe(e: &crate::Error) -> bool {
    let io = match e {
        crate::Error::Io(io) => Some(io),
        crate::Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => Some(io),
            _ => None,
        },
        _ => None,
    };
    io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}
