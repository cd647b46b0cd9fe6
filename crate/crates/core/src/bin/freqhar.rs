use std::process::ExitCode;

fn main() -> ExitCode {
    freqhar::cli::run(std::env::args_os())
}
