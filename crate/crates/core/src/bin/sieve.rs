use clap::Parser;
use neumann_sieve::cli::{main_with, Args};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::process::exit(main_with(&Args::parse()));
}
