mod args;
mod commands;
mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io(_) => 4,
            CliError::Input(_) => 5,
            CliError::Runtime(_) => 6,
        }
    }
}

impl From<pathsel::Error> for CliError {
    fn from(e: pathsel::Error) -> Self {
        use pathsel::Error as E;
        let msg = e.to_string();
        match e {
            E::Io { .. } => CliError::Io(msg),
            E::InvalidHyperparameter(_) | E::InvalidConfig(_) => CliError::Config(msg),
            E::Malformed { .. }
            | E::Csv(_)
            | E::DuplicateId(_)
            | E::EmptyPathway(_)
            | E::OrphanGene(_)
            | E::UnknownGene(_)
            | E::DimensionMismatch(_)
            | E::NonPositiveSurvivalTime { .. }
            | E::MissingValue { .. }
            | E::Checkpoint(_) => CliError::Input(msg),
            E::NotPositiveDefinite
            | E::RankZero(_)
            | E::CftpNoCoalescence(_)
            | E::InvalidState(_)
            | E::EmptyTrace => CliError::Runtime(msg),
        }
    }
}

fn out_dir(command: &Command) -> &Path {
    match command {
        Command::Simulate(a) => &a.out.out,
        Command::ScanEta(a) => &a.out.out,
        Command::Fit(a) => &a.out.out,
        Command::Predict(a) => &a.out.out,
        Command::Report(a) => &a.out.out,
    }
}

fn write_run_meta(matches: &clap::ArgMatches, command: &Command, wall: f64) -> Result<(), CliError> {
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut text = String::new();
    let _ = writeln!(text, "# pathsel {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "# command: {}", command.name());
    let _ = writeln!(text, "# finished_unix: {started}");
    let _ = writeln!(text, "# wall_time_seconds: {wall:.3}");
    let _ = writeln!(text, "# rerun: pathsel {} --config run_meta.txt", command.name());
    for (k, v) in config::resolved(matches) {
        let _ = writeln!(text, "{k}={v}");
    }
    let path = out_dir(command).join("run_meta.txt");
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let argv = config::expand(argv)?;
    let matches = Cli::command().try_get_matches_from(argv).unwrap_or_else(|e| e.exit());
    let cli = Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit());
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let start = Instant::now();
    match &cli.command {
        Command::Simulate(a) => commands::simulate(a)?,
        Command::ScanEta(a) => commands::scan_eta(a)?,
        Command::Fit(a) => commands::fit(a)?,
        Command::Predict(a) => commands::predict(a)?,
        Command::Report(a) => commands::report(a)?,
    }
    write_run_meta(&matches, &cli.command, start.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pathsel: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
