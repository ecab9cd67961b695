//! `pncrelay` — Monte-Carlo simulator for the relay-side iterative
//! receiver in network-coded underwater acoustic OFDM links.

use clap::Parser;
use pnc_relay::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
