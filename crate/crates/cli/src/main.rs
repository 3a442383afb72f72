mod args;
mod commands;
mod fail;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use fail::CliError;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build_global()
            .map_err(|e| CliError::usage(format!("--threads: {e}")))?;
    }
    match &cli.command {
        Command::Desc(a) => commands::desc(a),
        Command::Dist(a) => commands::dist(a),
        Command::Synth(a) => commands::synth(a),
        Command::Baseline(a) => commands::baseline(a),
    }
}
