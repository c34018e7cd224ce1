use clap::Parser;
use mrsolve_cli::commands::{run, Cli, CliError};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim().to_string());
            eprintln!("{}", err.record());
            std::process::exit(err.exit_code());
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", err.record());
            err.exit_code()
        }
    };
    std::process::exit(code);
}
