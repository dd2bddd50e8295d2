use clap::Parser;

use infocomm::expcli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
