mod args;
mod commands;
mod error;
mod output;
mod settings;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{BernsteinAction, Cli, Command, CommonArgs};
use error::CliError;
use output::{Format, Table};
use settings::Settings;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&CliError::Args(first_line(&e.to_string()).to_string())),
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn first_line(s: &str) -> &str {
    s.lines().next().unwrap_or("").trim_start_matches("error: ")
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::Pmf(a) => &a.common,
        Command::Expand(a) => &a.common,
        Command::Region(a) => &a.common,
        Command::Tv(c) | Command::Moments(c) | Command::ErrorTable(c) => c,
        Command::Bernstein(b) => match &b.action {
            BernsteinAction::Constants(c) => c,
            BernsteinAction::Divergence(a) => &a.common,
        },
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    let s = Settings::resolve(common(&cmd))?;
    let default_format = match cmd {
        Command::Expand(_) => Format::Json,
        _ => Format::Csv,
    };
    let table = with_threads(s.threads, || dispatch(&cmd, &s))??;
    emit(&table, s.format.unwrap_or(default_format), s.out.as_deref())
}

fn dispatch(cmd: &Command, s: &Settings) -> Result<Table, CliError> {
    match cmd {
        Command::Pmf(a) => commands::pmf_table(s, a.k.as_deref(), a.all, a.region.as_deref()),
        Command::Expand(a) => commands::expand_table(s, &a.k),
        Command::Region(a) => commands::region_table(s, &a.region),
        Command::Tv(_) => commands::tv_table(s),
        Command::Moments(_) => commands::moments_table(s),
        Command::Bernstein(b) => match &b.action {
            BernsteinAction::Constants(_) => commands::bernstein_constants_table(s),
            BernsteinAction::Divergence(a) => commands::divergence_table(s, &a.counts, &a.lambda),
        },
        Command::ErrorTable(_) => commands::error_table(s),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Args(format!("cannot start {threads:?} worker threads: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(
    _threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    Ok(f())
}

fn emit(table: &Table, format: Format, out: Option<&str>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    table.write(format, &mut buf)?;
    match out {
        None | Some("-") => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&buf)?;
            stdout.flush()?;
        }
        Some(path) => {
            std::fs::write(path, &buf)
                .map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))?;
        }
    }
    Ok(())
}
