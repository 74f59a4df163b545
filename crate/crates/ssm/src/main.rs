use std::process::ExitCode;

use clap::Parser;
use ssm::cli::{run, Cli};
use ssm::RunConfig;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::try_from(cli).and_then(|config| run(&config, &mut std::io::stderr()));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
