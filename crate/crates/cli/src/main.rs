use std::process::ExitCode;

use clap::Parser;
use rankgauge_cli::commands::{run, Cli};

fn main() -> ExitCode {
    rankgauge::rng::init_thread_pool();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rankgauge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
