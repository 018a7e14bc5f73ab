use std::fmt;
use std::process::ExitCode;

use clap::Parser;

mod commands;
mod config;

use commands::Cli;

/// Bad invocation that clap itself cannot catch (unreadable files, malformed config).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// The bound certification found at least one counterexample.
#[derive(Debug)]
pub struct CertificationFailed(pub usize);

impl fmt::Display for CertificationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bound certification failed: {} counterexamples", self.0)
    }
}

impl std::error::Error for CertificationFailed {}

const EXIT_DOMAIN: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_CERTIFICATION: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else if err.downcast_ref::<CertificationFailed>().is_some() {
                ExitCode::from(EXIT_CERTIFICATION)
            } else {
                ExitCode::from(EXIT_DOMAIN)
            }
        }
    }
}
