use std::process::ExitCode;

use clap::Parser;
use tracing_subscriber::EnvFilter;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    let cli = screenprio_cli::Cli::parse();
    match std::panic::catch_unwind(|| screenprio_cli::main_with(cli)) {
        Ok(code) => code,
        Err(_) => ExitCode::from(2),
    }
}
