use std::process::ExitCode;

use clap::Parser;
use zeta_ratios_cli::error::EXIT_VERIFICATION;
use zeta_ratios_cli::{run, Cli};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for path in &outcome.outputs {
                println!("  wrote {}", path.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("verification failed");
                ExitCode::from(EXIT_VERIFICATION as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
