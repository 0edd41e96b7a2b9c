mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use error::CliError;

fn run(cli: Cli, argv: &[String]) -> Result<(), CliError> {
    let (kind, flags) = cli.command.split();
    let flags = flags.resolve()?;
    if let Some(threads) = flags.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("--threads: {e}")))?;
    }
    let text = commands::run(kind, &flags, argv)?;
    output::write_output(flags.out.as_deref(), &text)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap reports usage errors as 2; ours is 1, and help/version is 0.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ptchain: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
