use clap::Parser;

fn main() {
    let cli = hierseq_cli::Cli::parse();
    std::process::exit(hierseq_cli::run(cli));
}
