use clap::Parser;
use std::io::Write;
use asaireg_cli::{exit_code, run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((out, code)) => {
            let mut stdout = std::io::stdout().lock();
            // a closed pipe is not our failure
            let _ = writeln!(stdout, "{out}").and_then(|_| stdout.flush());
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(exit_code(&e));
        }
    }
}
