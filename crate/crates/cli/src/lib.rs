//! Command-line front end for `lsv-core`.
//!
//! Every run writes one primary output (CSV or JSON) and a
//! `<output>.meta.json` sidecar holding the resolved settings, seeds,
//! library version, wall time and a summary of the results. Passing the
//! sidecar back through `--config` repeats the run.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;

use config::Resolver;
use output::{sidecar_path, write_csv, write_json, Format};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "LSV_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] lsv_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 usage, 3 non-convergence, 4 tail overflow, 1 anything else.
    /// `--help` and `--version` exit with 0.
    pub fn exit_code(&self) -> i32 {
        use lsv_core::Error as E;
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_)
            | CliError::Core(E::InvalidParameter(_) | E::GridTooSmall { .. }) => 2,
            CliError::Core(E::NonConvergence { .. }) => 3,
            CliError::Core(E::TailOverflow { .. }) => 4,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "lsv",
    version,
    about = "Diffusion coefficients of intermittent interval maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Invariant density of the induced map.
    Density(commands::DensityArgs),
    /// Mean return time and the Kac identity.
    Kac(commands::KacArgs),
    /// Variance σ² of Birkhoff sums by Green–Kubo.
    Sigma(commands::SigmaArgs),
    /// Normalized Birkhoff sums, Kolmogorov–Smirnov and batch means.
    Clt(commands::CltArgs),
    /// Numerical sup-checks of pullback bounds.
    Bounds(commands::BoundsArgs),
    /// Sweep over α with a smoothness diagnostic.
    Sweep(commands::SweepArgs),
    /// Power-law fit of return-time cylinder lengths.
    Tails(commands::TailsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Density(_) => "density",
            Command::Kac(_) => "kac",
            Command::Sigma(_) => "sigma",
            Command::Clt(_) => "clt",
            Command::Bounds(_) => "bounds",
            Command::Sweep(_) => "sweep",
            Command::Tails(_) => "tails",
        }
    }

    fn io(&self) -> &IoArgs {
        match self {
            Command::Density(a) => &a.io,
            Command::Kac(a) => &a.io,
            Command::Sigma(a) => &a.io,
            Command::Clt(a) => &a.io,
            Command::Bounds(a) => &a.io,
            Command::Sweep(a) => &a.io,
            Command::Tails(a) => &a.io,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// `key = value` file, or a sidecar from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Primary output file; defaults to `<command>.<format>` in
    /// `$LSV_OUTPUT_DIR` or the working directory.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    pub format: Option<Format>,
}

/// What a command hands back to the front end.
pub struct Report {
    pub table: output::Table,
    pub json: Value,
    pub results: Value,
    pub seeds: Value,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub command: &'static str,
    pub output: PathBuf,
    pub sidecar: PathBuf,
    /// The sidecar contents.
    pub meta: Value,
}

pub fn run_from<I, T>(args: I) -> Result<RunSummary, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<RunSummary, CliError> {
    let start = Instant::now();
    let name = cli.command.name();
    let io = cli.command.io().clone();
    let file = match &io.config {
        Some(path) => config::load(path, name)?,
        None => Default::default(),
    };
    let mut r = Resolver::new(file);
    let format = r.get("format", io.format, Format::Csv)?;
    let report = match &cli.command {
        Command::Density(a) => commands::density(a, &mut r)?,
        Command::Kac(a) => commands::kac(a, &mut r)?,
        Command::Sigma(a) => commands::sigma(a, &mut r)?,
        Command::Clt(a) => commands::clt(a, &mut r)?,
        Command::Bounds(a) => commands::bounds(a, &mut r)?,
        Command::Sweep(a) => commands::sweep(a, &mut r)?,
        Command::Tails(a) => commands::tails(a, &mut r)?,
    };
    let settings = r.finish()?;

    let output = io.output.unwrap_or_else(|| {
        let dir = std::env::var_os(OUTPUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_default();
        dir.join(format!("{name}.{}", format.extension()))
    });
    match format {
        Format::Csv => write_csv(&output, &report.table)?,
        Format::Json => write_json(&output, &report.json)?,
    }
    let sidecar = sidecar_path(&output);
    let meta = json!({
        "tool": "lsv",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "settings": settings,
        "seeds": report.seeds,
        "output": output.display().to_string(),
        "wall_time_seconds": start.elapsed().as_secs_f64(),
        "results": report.results,
    });
    write_json(&sidecar, &meta)?;
    Ok(RunSummary {
        command: name,
        output,
        sidecar,
        meta,
    })
}

/// Runs the binary: prints the result summary on success, the error on
/// failure, and returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run_from(args) {
        Ok(s) => {
            let text = serde_json::to_string_pretty(&s.meta["results"]).unwrap_or_default();
            // A closed pipe downstream is not a failure of the run.
            let _ = writeln!(std::io::stdout(), "{text}");
            eprintln!("wrote {} and {}", s.output.display(), s.sidecar.display());
            0
        }
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            e.exit_code()
        }
        Err(e) => {
            eprintln!("lsv: {e}");
            e.exit_code()
        }
    }
}
