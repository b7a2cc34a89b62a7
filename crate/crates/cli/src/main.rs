//! `mfa-dvv`: generate, encode, render, benchmark, compare and serve volumes.
//!
//! Failures print one line to stderr,
//! `error: code=<n> kind=<tag> msg="<text>"`, and exit with 2 for bad
//! arguments or inputs, 3 for I/O and file-format problems, and 4 for
//! numeric failures.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

pub(crate) struct Failure {
    code: u8,
    kind: String,
    msg: String,
}

impl From<mfa_dvv_core::Error> for Failure {
    fn from(e: mfa_dvv_core::Error) -> Self {
        use mfa_dvv_core::Error as E;
        let code = match &e {
            E::Io { .. } | E::SizeMismatch { .. } | E::Format(_) => 3,
            E::Numeric(_) | E::Pipeline { .. } => 4,
            _ => 2,
        };
        Failure {
            code,
            kind: e.kind().to_string(),
            msg: e.to_string(),
        }
    }
}

impl Failure {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "usage".into(),
            msg: msg.into(),
        }
    }

    pub(crate) fn io(context: &str, e: std::io::Error) -> Self {
        Failure {
            code: 3,
            kind: "io".into(),
            msg: format!("{context}: {e}"),
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .replace('"', "'")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.trim_start_matches("error: ");
            eprintln!("error: code=2 kind=usage msg=\"{}\"", one_line(msg));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!(
                "error: code={} kind={} msg=\"{}\"",
                f.code,
                f.kind,
                one_line(&f.msg)
            );
            ExitCode::from(f.code)
        }
    }
}
