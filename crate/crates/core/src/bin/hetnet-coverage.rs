use clap::Parser;
use hetnet_coverage::cli::{main_with, Args};

fn main() {
    std::process::exit(main_with(&Args::parse()));
}
