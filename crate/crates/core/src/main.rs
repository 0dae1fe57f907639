use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(sisug::cli::run())
}
