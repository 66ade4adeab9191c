mod args;
mod commands;
mod error;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::Cli;
use commands::{run, RunConfig};
use error::CliError;

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::from_cli(cli);
    cfg.check()?;
    let report = run(cli, &cfg)?;
    output::write_bytes(&report.render(cfg.format)?, cfg.output.as_deref())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let detail = e.render().to_string();
            eprintln!("{}", CliError::usage(detail.trim_end()).to_json());
            return ExitCode::from(2);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
