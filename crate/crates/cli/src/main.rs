use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(adiacycle_cli::run(std::env::args_os()))
}
