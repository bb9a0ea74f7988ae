use std::process::ExitCode;

use clap::Parser;
use fromage_cli::commands::{finish, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(finish(run(cli)))
}
