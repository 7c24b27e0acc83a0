use std::path::PathBuf;
use std::process::ExitCode;

use alf::cli::{load_config, run_command, Command, CommandOutput, RenderOptions, DIGITS_ENV};
use alf::error::AlfError;
use clap::{Parser, ValueEnum};
use serde_json::json;

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Simulate,
    Manifold,
    Singularities,
    Canard,
    Bifurcation,
    Divergence,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Simulate => Command::Simulate,
            Cmd::Manifold => Command::Manifold,
            Cmd::Singularities => Command::Singularities,
            Cmd::Canard => Command::Canard,
            Cmd::Bifurcation => Command::Bifurcation,
            Cmd::Divergence => Command::Divergence,
        }
    }
}

/// Absolute Laplacian flow experiments.
#[derive(Parser)]
#[command(version, about)]
struct Args {
    #[arg(value_enum)]
    command: Cmd,
    /// Scenario JSON; merged over the preset when both are given.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario (ex1, ex1-manifold, ex1-canard, ex1-canard-noncritical,
    /// ex2-unweighted, ex2-weighted, ex2-critical, ex3a, ex3b).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write an SVG time series (simulate, canard).
    #[arg(long)]
    svg: bool,
    /// Logarithmic time axis in SVG output.
    #[arg(long)]
    log_time: bool,
}

fn fail(e: &AlfError) -> ExitCode {
    eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string(), "exit_code": e.exit_code() }));
    ExitCode::from(e.exit_code() as u8)
}

fn write_outputs(dir: &PathBuf, out: &CommandOutput) -> Result<(), AlfError> {
    let io = |e: std::io::Error| AlfError::Config(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    for f in &out.files {
        std::fs::write(dir.join(&f.name), &f.contents).map_err(io)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match &args.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => return fail(&AlfError::Config(format!("cannot read {}: {e}", p.display()))),
        },
        None => None,
    };
    let digits = std::env::var(DIGITS_ENV).ok();
    let cfg = match load_config(args.preset.as_deref(), text.as_deref(), digits.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let opts = RenderOptions { svg: args.svg, log_time: args.log_time };
    let out = match run_command(args.command.into(), &cfg, opts) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    if let Err(e) = write_outputs(&args.out, &out) {
        return fail(&e);
    }
    println!("{}", serde_json::to_string_pretty(&out.summary).expect("summary is JSON"));
    match &out.advisory {
        Some(e) => fail(e),
        None => ExitCode::SUCCESS,
    }
}
