use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(lfpp_cli::main_with(std::env::args_os().skip(1)))
}
