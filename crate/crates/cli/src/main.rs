use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spherization_lab::{exit_code, run_path, validate_path, Overrides};

#[derive(Debug, Parser)]
#[command(name = "spherization-lab", version, about = "Run reproducible Reeb-flow entropy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (overrides the environment and the file).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; results do not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Parse and range-check a config file.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            workers,
        } => {
            let report = run_path(&config, &Overrides { out, seed, workers });
            let m = &report.manifest;
            for c in &m.checks {
                println!(
                    "{} {}: {} (want {})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.observed,
                    c.threshold
                );
            }
            if let Some(e) = &m.error {
                eprintln!("error [{}]: {}", e.category, e.message);
            }
            println!("manifest: {}", report.out_dir.join(spherization_lab::manifest::MANIFEST_FILE).display());
            report.exit_code
        }
        Command::Validate { config } => match validate_path(&config) {
            Ok(cfg) => {
                println!("ok: {}", cfg.experiment.as_str());
                0
            }
            Err(e) => {
                eprintln!("{}: {e}", e.category().as_str());
                exit_code(e.category())
            }
        },
    };
    ExitCode::from(code as u8)
}
