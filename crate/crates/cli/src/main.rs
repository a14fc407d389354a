use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kpp_cli::{exit_code, run_to_dir, CommandName, RunOptions};

/// Analyses and simulations of cooperative KPP reaction-diffusion systems.
#[derive(Debug, Parser)]
#[command(name = "kpp-lab", version)]
struct Cli {
    #[arg(value_enum)]
    command: CommandName,
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 4 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(4);
    }
    let opts = RunOptions { threads: cli.threads };
    match run_to_dir(cli.command, &cli.config, cli.out.as_deref(), &opts) {
        Ok((outcome, dir)) => {
            for line in &outcome.lines {
                println!("{line}");
            }
            println!("config_hash = {}", outcome.config_hash);
            println!("wrote {}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
