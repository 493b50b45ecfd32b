use std::process::ExitCode;

use clap::Parser;
use fvdsim::Cli;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match fvdsim::run(&cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("fvdsim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
