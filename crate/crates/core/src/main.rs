use std::process::ExitCode;

use relaysim::cli::{parse_args, run_sweep, CliError};

fn main() -> ExitCode {
    let spec = match parse_args(std::env::args_os()) {
        Ok(spec) => spec,
        Err(CliError::Clap(e)) => e.exit(),
        Err(e) => return fail(e),
    };
    match run_sweep(&spec) {
        Ok(rows) => {
            eprintln!("wrote {} rows to {}", rows.len(), spec.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
