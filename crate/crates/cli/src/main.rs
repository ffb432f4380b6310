use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PHOTOLATTICE_LOG", "warn")).init();
    let args = photolattice_cli::Args::parse();
    std::process::exit(photolattice_cli::main_with(args));
}
