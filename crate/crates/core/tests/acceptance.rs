//! Release gate: runs the twelve verification criteria and prints one
//! verdict line per criterion. Exits nonzero if any criterion fails, so
//! `cargo test` treats a regression as a failed target.

use mixedvol::selftest;

fn main() {
    let results = selftest::run_all();
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if !failed.is_empty() {
        eprintln!("{} of {} criteria failed: {}", failed.len(), results.len(), failed.join(", "));
        std::process::exit(1);
    }
    println!("all {} criteria passed", results.len());
}
