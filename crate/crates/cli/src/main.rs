use clap::Parser;

fn main() {
    std::process::exit(freqkey_cli::run(freqkey_cli::Cli::parse()));
}
