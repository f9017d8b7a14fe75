use clap::Parser;

fn main() {
    let cli = sptensor::cli::Cli::parse();
    std::process::exit(sptensor::cli::run(cli));
}
