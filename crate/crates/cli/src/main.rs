use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use xshap_cli::config::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match xshap_cli::run(cli) {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(outcome.stdout.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(1);
            }
            match outcome.failure {
                None => ExitCode::SUCCESS,
                Some(e) => fail(&e),
            }
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &xshap_cli::CliError) -> ExitCode {
    eprintln!("xshap: {e}");
    ExitCode::from(e.exit_code() as u8)
}
