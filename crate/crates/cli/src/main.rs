//! `interfere` command-line tool.
//!
//! Exit status: 0 on success, 1 on usage or validation errors, 2 when
//! estimation fails (overlap violations, non-convergence, ...). Errors are
//! printed as a single `error[<kind>]: <message>` line on stderr.

mod args;
mod commands;
mod config;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use report::Emitter;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Lib(interfere::Error),
    Output(std::io::Error),
}

impl From<interfere::Error> for CliError {
    fn from(e: interfere::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e)
    }
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Lib(e) => e.kind(),
            CliError::Output(_) => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(e) if e.is_estimation() => 2,
            _ => 1,
        }
    }

    fn message(&self) -> String {
        let text = match self {
            CliError::Usage(m) | CliError::Config(m) => m.clone(),
            CliError::Lib(e) => e.to_string(),
            CliError::Output(e) => e.to_string(),
        };
        text.replace('\n', " ")
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let stdout = std::io::stdout();
    let mut out = Emitter::new(cli.format, stdout.lock());
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a, &mut out),
        Command::Signature(a) => commands::signature(a, &mut out),
        Command::Inject(a) => commands::inject(a, &mut out),
        Command::Estimate(a) => commands::estimate(a, &mut out),
        Command::Inflate(a) => commands::inflate_cmd(a, &mut out),
        Command::Toy(a) => commands::toy(a, &mut out),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error[{}]: {}", e.kind(), e.message());
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let argv = match config::merge(std::env::args_os().collect()) {
        Ok(argv) => argv,
        Err(msg) => return fail(CliError::Config(msg)),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let mut lines = text.lines();
            let first = lines.next().unwrap_or_default();
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            for line in lines {
                eprintln!("{line}");
            }
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
