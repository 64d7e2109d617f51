//! `blgc`: run, measure, verify, and replay bounded local generator
//! dynamics from a TOML config.
//!
//! Exit codes, one per failure class:
//!   0  success
//!   2  config parse failure (malformed TOML, unreadable config file)
//!   3  validation failure (out-of-range or inconsistent parameters)
//!   4  invariant failure (norm/cap/monitor violation, replay mismatch,
//!      certificate violation)
//!   5  I/O failure on outputs or snapshots

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{print_error, resolve_out_dir, CmdError};
use config::{parse_config, ConfigError};

const EXIT_PARSE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_INVARIANT: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(name = "blgc", version, about = "Bounded local generator dynamics runner")]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "blgc.toml")]
    config: PathBuf,

    /// Output directory (overrides output.dir from the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Keep every k-th row when writing per-step metrics.
    #[arg(long, global = true, default_value_t = 1)]
    stride: u64,

    /// Suppress progress output on stdout.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured trajectory; write final.snapshot, metrics.csv and
    /// digest.txt.
    Evolve,
    /// Run the configured step count at each size in sweep.sizes; write
    /// sweep.csv with per-update operation counts and timings.
    Sweep,
    /// Check state admissibility, the neighborhood cap, and per-update norm
    /// certificates; write certificates.csv.
    Verify,
    /// Re-run the configured trajectory and compare against the recorded
    /// digest.txt.
    Replay,
}

fn run(cli: &Cli) -> Result<(), u8> {
    if cli.stride == 0 {
        print_error("error", "--stride must be at least 1");
        return Err(EXIT_VALIDATION);
    }
    let text = std::fs::read_to_string(&cli.config).map_err(|e| {
        print_error("error", &format!("cannot read config {}: {e}", cli.config.display()));
        EXIT_PARSE
    })?;
    let cfg = parse_config(&text).map_err(|e| {
        print_error("error", &e.to_string());
        match e {
            ConfigError::Parse(_) => EXIT_PARSE,
            ConfigError::Validation(_) => EXIT_VALIDATION,
        }
    })?;
    let out = resolve_out_dir(cli.out.clone(), &cfg);

    let result = match cli.command {
        Command::Evolve => commands::cmd_evolve(&cfg, &out, cli.stride, cli.quiet),
        Command::Sweep => commands::cmd_sweep(&cfg, &out, cli.quiet),
        Command::Verify => commands::cmd_verify(&cfg, &out, cli.quiet),
        Command::Replay => commands::cmd_replay(&cfg, &out, cli.quiet),
    };
    result.map_err(|e| match e {
        CmdError::Invariant(msg) => {
            print_error("invariant violation", &msg);
            EXIT_INVARIANT
        }
        CmdError::Io(msg) => {
            print_error("i/o error", &msg);
            EXIT_IO
        }
        CmdError::Other(msg) => {
            print_error("error", &msg);
            EXIT_VALIDATION
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
