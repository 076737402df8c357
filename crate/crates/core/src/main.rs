//! Command-line surface over the library: trace ingestion, distribution
//! fitting, rank identity testing, runtime prediction, synthetic simulation,
//! and a one-stop report.
//!
//! Every command prints `key=value` lines on stdout and writes CSV artifacts
//! next to its input; reruns with the same flags produce byte-identical
//! output. Failures print a single machine-parsable line
//! `error=<slug> detail=<message>` on stderr with exit code 2 (usage or
//! missing files), 3 (bad data content), or 4 (numerical failure).

use clap::Parser;
use std::process::ExitCode;

mod commands;

fn one_line(text: &str) -> String {
    text.replace('\n', "; ").trim_end_matches("; ").to_string()
}

fn main() -> ExitCode {
    let cli = match commands::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("error=usage detail={}", one_line(&e.to_string()));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(stdout_text) => {
            print!("{stdout_text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error={} detail={}", e.slug(), one_line(&e.to_string()));
            ExitCode::from(e.exit_code())
        }
    }
}
