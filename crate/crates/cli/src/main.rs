//! `caloronkit`: generate test data, compute characteristic forms and run the
//! verification suites.

mod compute;
mod generate;
mod grid_arg;
mod output;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "caloronkit", version, about = "Numerical caloron correspondence and string forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize)]
#[serde(tag = "command", rename_all = "lowercase")]
enum Command {
    /// Write seeded random pairs, maps or homotopies.
    Generate(generate::GenerateArgs),
    /// Evaluate one quantity on stored data.
    Compute(compute::ComputeArgs),
    /// Run named verification suites.
    Verify(verify::VerifyArgs),
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Grid descriptor: `AxBxC`, `AxBxCs1` (last circle is the loop) or `s3:AxBxC`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub rank: usize,
    /// Degree cutoff of characteristic forms.
    #[arg(long)]
    pub cutoff: Option<usize>,
    /// Identity tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Relative tolerance of exactness decisions.
    #[arg(long, default_value_t = 1e-7)]
    pub exact_tol: f64,
    /// RK4 steps per loop for holonomies.
    #[arg(long)]
    pub ode_steps: Option<usize>,
    /// Output file; CSV and report files are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

impl Common {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            bail!("--rank must be positive");
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                bail!("--tol must be positive, got {t}");
            }
        }
        if !(self.exact_tol > 0.0) {
            bail!("--exact-tol must be positive, got {}", self.exact_tol);
        }
        if self.ode_steps == Some(0) {
            bail!("--ode-steps must be positive");
        }
        Ok(())
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("CALORONKIT_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| anyhow::anyhow!("CALORONKIT_THREADS={v:?} is not a count"))?;
        if n > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
        }
    }
    Ok(())
}

/// Runs the command; `Ok(false)` means an identity check failed.
fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let config = serde_json::to_value(&cli.command)?;
    match cli.command {
        Command::Generate(args) => generate::run(&args).map(|()| true),
        Command::Compute(args) => compute::run(&args, config),
        Command::Verify(args) => verify::run(&args, config),
    }
}

fn error_kind(err: &anyhow::Error) -> String {
    match err.downcast_ref::<caloronkit::Error>() {
        Some(e) => format!("{e:?}").split(['(', ' ', '{']).next().unwrap_or("Error").to_string(),
        None if err.downcast_ref::<std::io::Error>().is_some() => "Io".into(),
        None => "Input".into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            let body = serde_json::json!({
                "error": { "kind": error_kind(&err), "message": format!("{err:#}") }
            });
            eprintln!("{body}");
            ExitCode::from(2)
        }
    }
}
