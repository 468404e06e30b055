//! `radial-sle`: verification, enumeration and simulation front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 a tolerance check failed, 4 runtime halt.

mod args;
mod commands;
mod config;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use args::Cli;
use commands::{Output, Primary, Status};
use config::RunFile;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] radial_sle::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        use radial_sle::Error as E;
        match self {
            CliError::Invalid(_) => 2,
            CliError::Core(E::Domain(_) | E::Config(_) | E::Parse(_) | E::Step(_) | E::NotReducible(_)) => 2,
            CliError::Core(_) | CliError::Io(_) => 4,
        }
    }
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn emit(out: Option<&Path>, manifest: &RunFile, primary: Primary) -> Result<(), CliError> {
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.json"), pretty(manifest))?;
        match primary {
            Primary::Report(v) => fs::write(dir.join("report.json"), pretty(&v))?,
            Primary::Text(t) => fs::write(dir.join("patterns.txt"), t)?,
            Primary::Traces { csv, diagnostics } => {
                if csv.len() == 1 {
                    fs::write(dir.join("traces.csv"), &csv[0])?;
                } else {
                    for (i, c) in csv.iter().enumerate() {
                        fs::write(dir.join(format!("traces_{i:04}.csv")), c)?;
                    }
                }
                fs::write(dir.join("diagnostics.json"), pretty(&diagnostics))?;
            }
        }
        return Ok(());
    }
    let mut stdout = std::io::stdout().lock();
    match primary {
        Primary::Report(v) => stdout.write_all(pretty(&json!({"manifest": manifest, "report": v})).as_bytes())?,
        Primary::Text(t) => {
            stdout.write_all(t.as_bytes())?;
            eprintln!("{}", serde_json::to_string(manifest).expect("serializable"));
        }
        Primary::Traces { csv, diagnostics } => {
            if csv.len() != 1 {
                return Err(CliError::Invalid("ensembles need --out".into()));
            }
            stdout.write_all(&csv[0])?;
            let side: Value = json!({"manifest": manifest, "diagnostics": diagnostics});
            eprintln!("{}", serde_json::to_string(&side).expect("serializable"));
        }
    }
    stdout.flush()?;
    Ok(())
}

fn run() -> Result<Status, CliError> {
    let (argv, source) = config::expand(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            e.print()?;
            return Ok(Status::Ok);
        }
        Err(e) => {
            let msg = e.render().to_string();
            return Err(CliError::Invalid(source.map_or(msg.clone(), |s| s.annotate(&msg))));
        }
    };
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("--jobs: {e}")))?;
    }
    let (words, args) = cli.command.resolved();
    let manifest = RunFile::manifest(&words, args);
    let Output { primary, status } = commands::run(&cli.command)?;
    emit(cli.out.as_deref(), &manifest, primary)?;
    Ok(status)
}

fn main() -> ExitCode {
    match run() {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Tolerance(msg)) => {
            eprintln!("tolerance check failed: {msg}");
            ExitCode::from(3)
        }
        Ok(Status::Halt(msg)) => {
            eprintln!("halted: {msg}");
            ExitCode::from(4)
        }
        Err(e) => {
            let msg = e.to_string();
            eprintln!("{}", if msg.starts_with("error:") { msg } else { format!("error: {msg}") }.trim_end());
            ExitCode::from(e.code())
        }
    }
}
