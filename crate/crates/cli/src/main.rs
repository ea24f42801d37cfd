use clap::Parser;

fn main() {
    let cli = anilp::Cli::parse();
    std::process::exit(anilp::run(cli));
}
