use clap::Parser;

fn main() {
    let cli = crnflux::cli::Cli::parse();
    std::process::exit(crnflux::cli::main_with(cli));
}
