use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use plap_cli::{parse_config, run, Command, RunOptions};

/// Radial p-Laplacian scenarios and estimate verification.
#[derive(Debug, Parser)]
#[command(name = "plap", version)]
struct Cli {
    /// solve | wolff | verify-chain | certify | embedding | sweep | audit | local
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Concurrent sweep members.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    workers: u16,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions { workers: usize::from(cli.workers), out: cli.out };
    match run(cli.command, &cfg, &text, &opts) {
        Ok(result) => {
            let summary = &result.manifest.summary;
            for v in &summary.violations {
                eprintln!("violation: {v}");
            }
            if let Some(e) = &summary.error {
                eprintln!("error: {e}");
            }
            for a in &result.manifest.artifacts {
                println!("{}  {}", a.sha256, a.name);
            }
            println!("manifest: {}", result.manifest_path.display());
            ExitCode::from(result.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: cannot write artifacts: {e}");
            ExitCode::from(2)
        }
    }
}
