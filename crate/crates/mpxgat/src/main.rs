use std::process::ExitCode;

use clap::Parser;
use mpxgat::cli::{self, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MPXGAT_LOG", "info")).init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = Cli::parse();
    match cli::run(&cli, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
