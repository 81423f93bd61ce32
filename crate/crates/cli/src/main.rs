use std::path::PathBuf;

use clap::Parser;
use hammer_cli::{Command, Format, RunConfig};

/// Solve and check Hammerstein integral equations and nonlocal boundary
/// value problems.
#[derive(Debug, Parser)]
#[command(name = "hammer", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// Problem-spec document (JSON); not used by `examples`.
    spec: Option<PathBuf>,
    /// Solution table to check, for `verify`.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Number of grid intervals: a power of two, at least 8.
    #[arg(long, env = "HAMMER_GRID")]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn main() {
    let args = Args::parse();
    let cfg = RunConfig {
        command: args.command,
        spec: args.spec,
        solution: args.solution,
        grid: args.grid,
        tol: args.tol,
        max_iter: args.max_iter,
        out: args.out,
        format: args.format,
    };
    std::process::exit(hammer_cli::execute(&cfg));
}
