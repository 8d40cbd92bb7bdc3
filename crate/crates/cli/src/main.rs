use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = autoseg_cli::Cli::parse();
    autoseg_cli::init_logging(cli.verbose, cli.quiet);
    match autoseg_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
