mod args;
mod commands;
mod error;

use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::Parser;
use tempfile::NamedTempFile;

use args::{read_config, Cli, RunConfig};
use commands::{execute, run_selftest, Output};
use error::CliError;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Writes every file to a temporary sibling first and renames only once all
/// of them were written, so a failure leaves no partial output behind.
fn write_outputs(outputs: &[Output]) -> Result<(), CliError> {
    let mut staged = Vec::new();
    for o in outputs {
        match &o.path {
            None => {
                std::io::stdout()
                    .write_all(o.contents.as_bytes())
                    .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
            }
            Some(path) => {
                let dir = match path.parent() {
                    Some(d) if !d.as_os_str().is_empty() => d,
                    _ => Path::new("."),
                };
                let mut tmp = NamedTempFile::new_in(dir).map_err(|e| io_err(path, e))?;
                tmp.write_all(o.contents.as_bytes()).map_err(|e| io_err(path, e))?;
                tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
                staged.push((tmp, path));
            }
        }
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    }
    Ok(())
}

fn run(mut cli: Cli) -> Result<(), CliError> {
    if let Some(path) = cli.config.clone() {
        let map = read_config(&path)?;
        cli.merge_config(&map)?;
    }
    if cli.selftest {
        return if run_selftest() {
            Ok(())
        } else {
            Err(CliError::Numerical("selftest failed".into()))
        };
    }
    let cfg = RunConfig::from_cli(&cli)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("--threads: {e}")))?;
    }
    let rendered = execute(&cfg)?;
    write_outputs(&rendered.outputs)?;
    if let Some(note) = rendered.note {
        eprintln!("{note}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qiopa: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
