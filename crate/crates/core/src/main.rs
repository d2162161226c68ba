use std::process::ExitCode;

use clap::Parser;
use specround::cli::{run, Cli};

fn init_threads() {
    let Ok(v) = std::env::var("SPECROUND_THREADS") else {
        return;
    };
    match v.trim().parse::<usize>() {
        Ok(n) if n > 0 => {
            if let Err(e) = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
            {
                log::warn!("could not size thread pool: {e}");
            }
        }
        _ => log::warn!("ignoring SPECROUND_THREADS={v:?}; expected a positive integer"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    init_threads();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
