use clap::Parser;
use rof_cr::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
