use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let args = acw::cli::Args::parse();
    match acw::cli::execute(&args) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
