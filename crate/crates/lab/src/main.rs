use boundary_noise::convolution::catalog;
use boundary_noise_lab::{replay, run, run_suite, LabError, ScenarioConfig, SUITES};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bnlab", version, about = "Run boundary-noise experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every pipeline in a config and write a manifest.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` and the output root.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the scenario catalogue.
    List,
    /// Run a verification suite, or `all`.
    Verify { suite: String },
    /// Rerun the config recorded in a manifest and compare file hashes.
    Replay { manifest: PathBuf },
}

fn execute(cli: Cli) -> Result<(), LabError> {
    match cli.command {
        Command::Run { config, output } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if output.is_some() {
                cfg.output_dir = output;
            }
            let (dir, m) = run(&cfg)?;
            for (k, v) in &m.verdicts {
                println!("{k}: {v}");
            }
            println!("wrote {} files and manifest to {}", m.files.len(), dir.display());
        }
        Command::List => {
            for e in catalog() {
                println!("{e}");
            }
        }
        Command::Verify { suite } => {
            let names: Vec<&str> = if suite == "all" { SUITES.to_vec() } else { vec![suite.as_str()] };
            let mut failed = Vec::new();
            for name in names {
                let r = run_suite(name)?;
                println!("{r}");
                if !r.passed() {
                    failed.push(name.to_string());
                }
            }
            if !failed.is_empty() {
                return Err(LabError::SuiteFailed(failed.join(", ")));
            }
        }
        Command::Replay { manifest } => {
            let m = replay(&manifest)?;
            println!("replay matches: {} files", m.files.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
