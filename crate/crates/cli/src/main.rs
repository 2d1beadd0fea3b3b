use clap::Parser;

fn main() {
    let cli = nldiff_cli::Cli::parse();
    std::process::exit(nldiff_cli::execute(&cli));
}
