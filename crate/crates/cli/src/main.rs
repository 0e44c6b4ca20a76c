use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use respo_cli::{config, run, Command, Failure};

/// Periodic solutions of parabolic equations at resonance.
#[derive(Parser)]
#[command(name = "respo", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in scenario used as the base configuration.
    #[arg(long, global = true, value_parser = config::PRESETS)]
    preset: Option<String>,
    /// Output directory (overrides output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override a config value, e.g. --set nonlinearity.expr="atan(y)-0.25".
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Eigenvalue table and operator checks.
    Spectrum,
    /// Kernel conditions and eigenvalue counts at the resonant λ.
    ResonanceCheck,
    /// Landesman–Lazer verdict.
    LlCheck,
    /// Samples of the averaged kernel map g.
    AveragedMap,
    /// Brouwer degree of g.
    Degree,
    /// Index formula cross-check on a Galerkin truncation.
    VerifyIndex,
    /// Find and certify a periodic solution.
    SolvePeriodic,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::ResonanceCheck => Command::ResonanceCheck,
            Cmd::LlCheck => Command::LlCheck,
            Cmd::AveragedMap => Command::AveragedMap,
            Cmd::Degree => Command::Degree,
            Cmd::VerifyIndex => Command::VerifyIndex,
            Cmd::SolvePeriodic => Command::SolvePeriodic,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let c = &cli.common;
    let cfg = match config::load(c.preset.as_deref(), c.config.as_deref(), &c.set) {
        Ok(cfg) => cfg,
        Err(e) => {
            let f = Failure::Config(e);
            eprintln!("error: {f}");
            return ExitCode::from(f.exit_code() as u8);
        }
    };
    let out = c.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    match run(cli.command.into(), &cfg, &out) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::SUCCESS
        }
        Err((f, report)) => {
            print!("{report}");
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
