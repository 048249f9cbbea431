mod cli;
mod commands;
mod data;

use std::process::ExitCode;

use clap::error::ErrorKind as ClapKind;
use clap::Parser;
use tubal::{Error, ErrorKind};

use cli::{Cli, Command};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn kind_name(kind: ErrorKind) -> (&'static str, u8) {
    match kind {
        ErrorKind::Usage => ("usage", EXIT_USAGE),
        ErrorKind::Data => ("data", EXIT_DATA),
        ErrorKind::Numerical => ("numerical", EXIT_NUMERICAL),
    }
}

/// One `error kind=... msg="..."` line on stderr.
fn report(kind: ErrorKind, msg: &str) -> ExitCode {
    let (name, code) = kind_name(kind);
    eprintln!("error kind={name} msg={msg:?}");
    ExitCode::from(code)
}

fn configure_threads() -> Result<(), Error> {
    let Ok(value) = std::env::var("TUBALPCA_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidArgument(format!("TUBALPCA_THREADS=`{value}` is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

fn run(cli: &Cli) -> Result<(), Error> {
    configure_threads()?;
    match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Classify(a) => commands::classify(a),
        Command::Evaluate(a) => commands::evaluate_cmd(a),
        Command::Compress(a) => commands::compress(a),
        Command::Svd(a) => commands::svd(a),
        Command::Bench(a) => commands::bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ClapKind::DisplayHelp | ClapKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let first = e.to_string().lines().next().unwrap_or_default().to_string();
            return report(ErrorKind::Usage, first.trim_start_matches("error: "));
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(e.kind(), &e.to_string()),
    }
}
