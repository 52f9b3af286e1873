use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use mupricing_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match run(&cli) {
        Ok(report) => {
            println!("{}", report.to_json());
            // timing stays off stdout so reports are reproducible
            eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
