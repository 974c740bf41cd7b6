use std::path::PathBuf;
use std::process::ExitCode;

use bps_vortex::cli::{main_with, Command};
use clap::Parser;

/// Solve BPS vortex equations from a JSON run configuration.
#[derive(Parser, Debug)]
#[command(name = "bps-vortex", version)]
struct Args {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum, default_value = "solve")]
    command: Command,
    /// Dotted-path override such as `grid.nx=64` or `phi_zeros.0=[1,2]`; repeatable.
    #[arg(long = "override", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Directory that artifact paths are resolved against.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let code = main_with(&args.config, args.command, &args.overrides, &args.out);
    ExitCode::from(code as u8)
}
