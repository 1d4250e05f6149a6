use clap::Parser;

fn main() {
    let cli = surfgrf::cli::Cli::parse();
    if let Err(e) = surfgrf::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
