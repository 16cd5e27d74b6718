use std::process::exit;

fn main() {
    exit(fmplex::cli::run());
}
