//! Prints the oracle's results document for a program.
//!
//! Usage: oracle_report <program.json> <analysis,analysis,...>

use std::sync::Arc;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let [_, path, names] = &args[..] else {
        eprintln!("usage: oracle_report <program.json> <analyses>");
        std::process::exit(2);
    };
    let text = std::fs::read_to_string(path).expect("readable program");
    let program = Arc::new(blackboard_ir::parse_program(&text).expect("valid program"));
    let names: Vec<&str> = names.split(',').collect();
    let result = blackboard_oracle::naive_solve(&program, &names).expect("valid configuration");
    print!("{}", result.report().to_json());
}
