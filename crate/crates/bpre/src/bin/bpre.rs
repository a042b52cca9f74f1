use clap::Parser;

fn main() {
    let cli = bpre::cli::Cli::parse();
    if let Err(err) = bpre::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
