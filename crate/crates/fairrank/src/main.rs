//! Thin binary wrapper around the library CLI.

use std::process::ExitCode;

fn main() -> ExitCode {
    let code = fairrank::cli::run_command(std::env::args_os());
    ExitCode::from(u8::try_from(code).unwrap_or(1))
}
