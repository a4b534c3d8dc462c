use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(holelab::cli::main_from(std::env::args_os()))
}
