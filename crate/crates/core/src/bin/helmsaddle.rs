use clap::Parser;

fn main() {
    let cli = helmsaddle::cli::Cli::parse();
    std::process::exit(helmsaddle::cli::run(&cli));
}
