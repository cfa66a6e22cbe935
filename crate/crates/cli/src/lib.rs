//! Command-line front end for the `qcap` toolkit.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::Parser;

pub mod args;
pub mod commands;
mod config;

pub use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Core(#[from] qcap::Error),
    #[error("cannot write {}: {source}", path.display())]
    Output { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Core(e) if e.is_validation() => EXIT_VALIDATION,
            _ => EXIT_RUNTIME,
        }
    }
}

/// Writes `bytes` to `path`, or to standard output when there is none.
pub(crate) fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|source| CliError::Output {
            path: p.to_path_buf(),
            source,
        }),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)
                .and_then(|()| out.flush())
                .map_err(|source| CliError::Output {
                    path: "<stdout>".into(),
                    source,
                })
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QCAP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Validation(format!("QCAP_THREADS: `{raw}` is not a positive integer"))
    })?;
    // A pool may already exist when called twice in one process.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let result = config::expand(args).and_then(|args| {
        let cli = match Cli::try_parse_from(args) {
            Ok(cli) => cli,
            Err(e) => {
                let _ = e.print();
                return Ok(if e.use_stderr() {
                    EXIT_VALIDATION
                } else {
                    EXIT_OK
                });
            }
        };
        configure_threads()?;
        commands::dispatch(cli.command).map(|()| EXIT_OK)
    });
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}
