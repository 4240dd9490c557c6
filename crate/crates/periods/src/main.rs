use std::process::ExitCode;

fn main() -> ExitCode {
    periods::cli::run()
}
