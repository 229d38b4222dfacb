//! `opencontrol`: run switchable-noise control experiments from a JSON config.

mod config;
mod output;
mod run;

use clap::{Parser, Subcommand};
use config::{Diagnostic, ExperimentConfig, Mode};
use opencontrol::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;
const EXIT_REACHABILITY: u8 = 4;
const EXIT_IO: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "opencontrol", version, about = "Optimal control of qubit registers with switchable noise")]
struct Cli {
    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; overrides the config's `output`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base seed; overrides the config's `seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate a given control sequence.
    Simulate,
    /// Optimise controls and noise amplitudes for a state transfer.
    Optimize,
    /// Plan (and optionally execute) a transfer by T-transforms.
    Hlp,
    /// Run an analytic initialisation or erasure protocol.
    Protocol,
    /// Dimension of the Lie closure of drift and controls.
    Controllability,
    /// Majorisation relation between initial and target spectra.
    Majorize,
    /// Check a config for a mode without running it.
    Validate {
        #[arg(value_enum)]
        mode: Mode,
    },
}

fn report(path: &str, d: &Diagnostic) {
    eprintln!("{path}: {d}");
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) | Error::Configuration(_) => EXIT_CONFIG,
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::Reachability(_) => EXIT_REACHABILITY,
    }
}

fn load(cli: &Cli) -> Result<(String, String, ExperimentConfig), ExitCode> {
    let Some(path) = &cli.config else {
        eprintln!("error: --config PATH is required");
        return Err(ExitCode::from(EXIT_CONFIG));
    };
    let shown = path.display().to_string();
    let src = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("{shown}: cannot read config: {e}");
        ExitCode::from(EXIT_CONFIG)
    })?;
    let mut cfg = config::parse(&src).map_err(|d| {
        report(&shown, &d);
        ExitCode::from(EXIT_CONFIG)
    })?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok((shown, src, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (shown, src, cfg) = match load(&cli) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let mode = match cli.command {
        Command::Validate { mode } => {
            let diags = config::validate(&cfg, mode, &src);
            for d in &diags {
                report(&shown, d);
            }
            if diags.is_empty() {
                println!("{shown}: ok");
                return ExitCode::SUCCESS;
            }
            return ExitCode::from(EXIT_CONFIG);
        }
        Command::Simulate => Mode::Simulate,
        Command::Optimize => Mode::Optimize,
        Command::Hlp => Mode::Hlp,
        Command::Protocol => Mode::Protocol,
        Command::Controllability => Mode::Controllability,
        Command::Majorize => Mode::Majorize,
    };
    let diags = config::validate(&cfg, mode, &src);
    if !diags.is_empty() {
        for d in &diags {
            report(&shown, d);
        }
        return ExitCode::from(EXIT_CONFIG);
    }
    let artifacts = match run::run(&cfg, mode) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("{}: {e}", mode.name());
            return ExitCode::from(exit_code(&e));
        }
    };
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from(cfg.output.as_deref().unwrap_or("out")));
    match output::write_artifacts(&dir, &artifacts) {
        Ok(files) => {
            for f in files {
                println!("{}", dir.join(f).display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}: cannot write artifacts: {e}", dir.display());
            ExitCode::from(EXIT_IO)
        }
    }
}
