//! Loads a chain description from TOML (the shipped default cell unless a
//! path is given) and reports parse errors with their location.

use waam_coord::chain_file::{load_chain, parse_chain, to_toml};
use waam_coord::default_chain;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/default_chain.toml").to_string());
    match load_chain(&path) {
        Ok(chain) => {
            println!("{path}: {} table + {} arm joints", chain.table_dof(), chain.arm_dof());
            println!("matches the built-in cell: {}", chain == default_chain());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    }

    let broken = to_toml(&default_chain()).replacen("axis = [", "axis = [0, ", 1);
    match parse_chain(&broken) {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("edited copy rejected: {e}"),
    }
}
