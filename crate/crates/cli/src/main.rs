use clap::Parser;
use rvrp_cli::args::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RVRP_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rvrp_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
