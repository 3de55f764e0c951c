use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use plap::{load_config, run_command, Command, Status};

/// Solve p-Laplacian systems and run the blow-up and entire-solution pipelines.
#[derive(Debug, Parser)]
#[command(name = "plap", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli.config, cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Status::Error.code() as u8);
        }
    };
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("plap-out/{}", cli.command.name())));
    match run_command(&cfg, &dir) {
        Ok((outcome, manifest)) => {
            if !cli.quiet || outcome.status != Status::Success {
                println!("{}", outcome.headline);
                println!("wrote {} files to {}", manifest.entries.len() + 1, dir.display());
            }
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::Error.code() as u8)
        }
    }
}
