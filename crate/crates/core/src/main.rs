use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use hnl::cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.text.as_bytes())
                .and_then(|_| stdout.flush())
                .is_err()
            {
                return ExitCode::from(2);
            }
            for m in &out.messages {
                eprintln!("hnl: {m}");
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("hnl: {e:#}");
            ExitCode::from(2)
        }
    }
}
