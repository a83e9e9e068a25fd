use clap::Parser;
use ffs_cli::commands::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(ffs_cli::exit_code(&err));
    }
}
