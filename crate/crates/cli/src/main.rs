use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spinext_cli::manifest::{Experiment, Manifest};
use spinext_cli::{CliResult, RunReport};

#[derive(Parser)]
#[command(name = "spinext", version, about = "Entanglement extraction by spin-dependent scattering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run any experiment manifest.
    Run { manifest: PathBuf },
    /// Write the N = 2, 4, 6 extraction series.
    Figure2 { out_dir: PathBuf },
    /// Compare the exact and effective transmission for a scatter-verify manifest.
    VerifyRc { manifest: PathBuf },
    /// Run a teleclone manifest.
    Teleclone { manifest: PathBuf },
    /// Measure the five-center singlet and prepare it by extraction.
    Ghzw { out_dir: PathBuf },
}

fn load_expecting(path: &Path, experiment: Experiment) -> CliResult<Manifest> {
    let m = Manifest::load(path)?;
    spinext_cli::expect_experiment(&m, experiment)?;
    Ok(m)
}

fn dispatch(command: Command) -> CliResult<RunReport> {
    match command {
        Command::Run { manifest } => spinext_cli::run_manifest(Manifest::load(&manifest)?),
        Command::Figure2 { out_dir } => spinext_cli::figure2(&out_dir),
        Command::VerifyRc { manifest } => spinext_cli::verify_rc(load_expecting(&manifest, Experiment::ScatterVerify)?),
        Command::Teleclone { manifest } => spinext_cli::teleclone(load_expecting(&manifest, Experiment::Teleclone)?),
        Command::Ghzw { out_dir } => spinext_cli::ghzw_default(&out_dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report.summary).expect("summary serializes"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spinext: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
