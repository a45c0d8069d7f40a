use std::process::ExitCode;

fn main() -> ExitCode {
    modelspace::cli::main_with_args(std::env::args_os())
}
