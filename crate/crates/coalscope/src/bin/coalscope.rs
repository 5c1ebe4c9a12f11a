use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(coalscope::cli::main_entry())
}
