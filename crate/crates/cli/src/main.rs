use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ARO_LOG", "warn")).init();
    let cli = aro_cli::Cli::parse();
    match aro_cli::run(cli, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aro: {e:#}");
            ExitCode::from(2)
        }
    }
}
