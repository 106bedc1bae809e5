use clap::Parser;
use compass_cli::commands::{dispatch, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COMPASS_LOG", "warn")).init();
    std::process::exit(dispatch(Cli::parse()));
}
