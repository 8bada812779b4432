use clap::Parser;

fn main() {
    let cli = ropnet_cli::Cli::parse();
    if let Err(e) = ropnet_cli::run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
