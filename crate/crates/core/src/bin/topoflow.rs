use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(topoflow::cli::run(std::env::args()) as u8)
}
