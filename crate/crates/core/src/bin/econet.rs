use std::process::ExitCode;

fn main() -> ExitCode {
    econet::cli::main_with_args(std::env::args_os())
}
