//! Batch driver: reads one JSON experiment, writes CSV tables and a manifest.
//!
//! Exit codes: 0 all PASS (or no criteria), 2 some criterion FAILed,
//! 3 INCONCLUSIVE without failures, 64 usage or config error,
//! 65 input outside a module's domain, 70 numerical failure, 74 I/O error.

// guards are written `!(x > 0.0)` so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use commands::{Outcome, Status, Which};
use config::{ConfigError, Experiment};
use output::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "cocycle-lab", version, about = "Random matrix product experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Lyapunov exponent, variance and stationary-measure regularity.
    Estimate(Common),
    /// Transfer-operator eigenvalues, cumulants and the Cramér series (d = 2).
    Spectrum(Common),
    /// Limit-theorem and kernel checks with a PASS/FAIL line per criterion.
    Verify {
        #[arg(value_enum)]
        which: Which,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(ConfigError),
    Module(cocycle_lab::Error),
    Io(String),
}

impl CliError {
    pub fn class(&self) -> &'static str {
        use cocycle_lab::Error as E;
        match self {
            CliError::Usage(_) => "usage-error",
            CliError::Config(_) => "config-error",
            CliError::Io(_) => "io-error",
            CliError::Module(e) => match e {
                E::Singular(_) => "singular-matrix",
                E::Dimension(_) => "dimension-error",
                E::InvalidMeasure(_) => "invalid-measure",
                E::Precondition(_) => "precondition-violated",
                E::DegenerateVariance(_) => "degenerate-variance",
                E::InsufficientMass(_) => "insufficient-mass",
                E::SingularInput(_) => "singular-input",
                E::NoConvergence { .. } => "no-convergence",
                E::GridMismatch(_) => "grid-mismatch",
                E::EmptySamples(_) => "empty-samples",
                E::SingularIntegrand(_) => "singular-integrand",
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        use cocycle_lab::Error as E;
        match self {
            CliError::Usage(_) | CliError::Config(_) => 64,
            CliError::Io(_) => 74,
            CliError::Module(
                E::NoConvergence { .. } | E::DegenerateVariance(_) | E::InsufficientMass(_) | E::SingularIntegrand(_),
            ) => 70,
            CliError::Module(_) => 65,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) => f.write_str(m),
            CliError::Config(e) => write!(f, "{e}"),
            // the class already names the kind, so only the inner message is shown
            CliError::Module(e) => {
                use cocycle_lab::Error as E;
                match e {
                    E::NoConvergence { what, iterations } => write!(f, "{what} after {iterations} iterations"),
                    E::Singular(m)
                    | E::Dimension(m)
                    | E::InvalidMeasure(m)
                    | E::Precondition(m)
                    | E::DegenerateVariance(m)
                    | E::InsufficientMass(m)
                    | E::SingularInput(m)
                    | E::GridMismatch(m)
                    | E::EmptySamples(m)
                    | E::SingularIntegrand(m) => f.write_str(m),
                }
            }
        }
    }
}

impl From<cocycle_lab::Error> for CliError {
    fn from(e: cocycle_lab::Error) -> Self {
        CliError::Module(e)
    }
}

pub fn status_exit_code(s: Status) -> u8 {
    match s {
        Status::Pass => 0,
        Status::Fail => 2,
        Status::Inconclusive => 3,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
/// Reports go to `stdout`, diagnostics to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            let _ = writeln!(stderr, "cocycle-lab: {}: {err}", err.class());
            return err.exit_code();
        }
    };
    match execute(cli, stdout) {
        Ok(status) => status_exit_code(status),
        Err(err) => {
            let _ = writeln!(stderr, "cocycle-lab: {}: {err}", err.class());
            err.exit_code()
        }
    }
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<Status, CliError> {
    let (label, common) = match &cli.command {
        Command::Estimate(c) => ("estimate".to_string(), c),
        Command::Spectrum(c) => ("spectrum".to_string(), c),
        Command::Verify { which, common } => (format!("verify {}", which.name()), common),
    };
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", common.config.display())))?;
    let exp = config::parse(&text).map_err(CliError::Config)?;
    let out_dir = common
        .out
        .clone()
        .or_else(|| exp.config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("cocycle-lab-out"));

    let threads = common.threads.unwrap_or_else(rayon::current_num_threads);
    if threads == 0 {
        return Err(CliError::Usage("--threads must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let outcome = pool.install(|| dispatch(&cli.command, &exp))?;

    let manifest = RunManifest {
        config_hash: exp.hash.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        command: label,
        threads,
        created_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        outputs: Vec::new(),
        timings_ms: outcome.timings_ms.clone(),
    };
    output::write_all(&out_dir, &exp.hash, &outcome.tables, manifest)
        .map_err(|e| CliError::Io(format!("cannot write to {}: {e}", out_dir.display())))?;
    for c in &outcome.criteria {
        let _ = writeln!(
            stdout,
            "{} {} value={:.6e} threshold={:.6e} ({})",
            c.status.label(),
            c.name,
            c.value,
            c.threshold,
            c.detail
        );
    }
    Ok(outcome.status())
}

fn dispatch(command: &Command, exp: &Experiment) -> Result<Outcome, CliError> {
    Ok(match command {
        Command::Estimate(_) => commands::cmd_estimate(exp)?,
        Command::Spectrum(_) => commands::cmd_spectrum(exp)?,
        Command::Verify { which, .. } => commands::cmd_verify(exp, *which)?,
    })
}
