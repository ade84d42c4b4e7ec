use std::process::ExitCode;

fn main() -> ExitCode {
    statprec::cli::main()
}
