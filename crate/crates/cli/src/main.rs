use clap::Parser;
use ppm_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Err(e) = ppm_cli::run(cli) {
        eprintln!("ppm: {e}");
        std::process::exit(e.exit_code());
    }
}
