use clap::Parser;
use hamstream::{cli_run, Args};
use std::process::ExitCode;

fn main() -> ExitCode {
    let args = Args::parse();
    match cli_run(&args, std::io::stdin().lock(), std::io::stdout().lock()) {
        Ok(summary) if summary.disagreements.is_some_and(|d| d > 0) => ExitCode::from(3),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hamstream: {e:#}");
            ExitCode::from(2)
        }
    }
}
