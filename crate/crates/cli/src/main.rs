use clap::Parser;
use manifold_embed::app::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        // one machine-readable line per failure
        eprintln!("error[{}] {}", err.kind(), err);
        std::process::exit(1);
    }
}
