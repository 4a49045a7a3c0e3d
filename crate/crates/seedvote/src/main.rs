use std::process::ExitCode;

fn main() -> ExitCode {
    match seedvote::cli::main_entry() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("seedvote: {e:#}");
            ExitCode::FAILURE
        }
    }
}
