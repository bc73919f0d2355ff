use std::process::ExitCode;

use clap::Parser;
use heatbound_cli::{configure_threads, execute, load_config, Args};

fn main() -> ExitCode {
    let args = Args::parse();
    configure_threads();
    let result = load_config(&args).and_then(|config| execute(args.command, &config));
    match result {
        Ok(outcome) => {
            if !args.quiet {
                print!("{}", outcome.summary);
                for file in &outcome.files {
                    println!("wrote {}", file.display());
                }
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(err) => {
            eprintln!("heatbound: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
