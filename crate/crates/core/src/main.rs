use clap::Parser;

fn main() {
    let cli = cartan_split::cli::Cli::parse();
    std::process::exit(cartan_split::cli::main_with(cli));
}
