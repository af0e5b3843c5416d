//! Config-driven batch runner behind the `adiabatic-lab` binary.
//!
//! `adiabatic-lab <subcommand> --config <file> [--out <path>] [--format csv|json]`
//!
//! Results go to `--out` (or `[output] path`) or standard output. When a file
//! is written, run metadata and timestamps go to `<path>.meta` so the data
//! file itself is byte-for-byte reproducible.

pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::Parser;

pub use config::{parse_config, Format, RunConfig};
pub use output::{Cell, Table};
pub use run::{run, RunOutput, Subcommand};

use crate::error::{LabError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "adiabatic-lab",
    version,
    about = "Adiabatic-limit experiments on small quantum systems"
)]
struct Args {
    #[arg(value_enum)]
    command: Subcommand,
    /// Run configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

fn unix_seconds() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn execute(args: Args) -> Result<()> {
    let cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| LabError::config(0, format!("cannot read {}: {e}", p.display())))?;
            Some(parse_config(&text)?)
        }
        None => None,
    };
    let format = match (&args.format, &cfg) {
        (Some(f), _) => Format::parse(f).expect("clap restricts values"),
        (None, Some(c)) => c.output.format,
        (None, None) => Format::Csv,
    };
    let out = args
        .out
        .clone()
        .or_else(|| cfg.as_ref().and_then(|c| c.output.path.clone()));

    let started = unix_seconds();
    let clock = Instant::now();
    let result = run(args.command, cfg.as_ref())?;
    let body = match format {
        Format::Csv => result.table.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&result.table.to_json())
                .map_err(|e| LabError::Numerical(format!("json encoding failed: {e}")))?;
            s.push('\n');
            s
        }
    };
    match out {
        Some(path) => {
            std::fs::write(&path, body)?;
            let mut meta = String::new();
            meta.push_str(&format!("subcommand = {}\n", args.command.label()));
            meta.push_str(&format!("version = {}\n", env!("CARGO_PKG_VERSION")));
            if let Some(c) = &args.config {
                meta.push_str(&format!("config = {}\n", c.display()));
            }
            for (k, v) in &result.meta {
                meta.push_str(&format!("{k} = {v}\n"));
            }
            meta.push_str(&format!("started_unix = {started:.3}\n"));
            meta.push_str(&format!(
                "elapsed_seconds = {:.3}\n",
                clock.elapsed().as_secs_f64()
            ));
            let mut meta_path = path.into_os_string();
            meta_path.push(".meta");
            std::fs::write(PathBuf::from(meta_path), meta)?;
        }
        None => {
            std::io::stdout().write_all(body.as_bytes())?;
        }
    }
    Ok(())
}

/// Parses arguments, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
