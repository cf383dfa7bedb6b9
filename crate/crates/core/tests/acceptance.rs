//! Runs the fourteen acceptance criteria and prints one PASS/FAIL line each.
//!
//! A criterion listed in `KNOWN_FAILURES` may fail without failing the run;
//! any other failure makes the binary exit nonzero. Pass criterion numbers as
//! arguments to run a subset.

use std::process::ExitCode;

use tlgas::acceptance::{run, KNOWN_FAILURES};

fn main() -> ExitCode {
    let ids: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).filter(|i| (1..=14).contains(i)).collect();
    let ids = if ids.is_empty() { (1..=14).collect() } else { ids };
    let mut unexpected = Vec::new();
    let mut passed = 0;
    for id in &ids {
        let r = run(*id);
        println!("{}", r.line());
        if r.pass {
            passed += 1;
        } else if !KNOWN_FAILURES.contains(id) {
            unexpected.push(*id);
        }
    }
    println!("acceptance: {passed}/{} passed; known failures {KNOWN_FAILURES:?}; unexpected failures {unexpected:?}", ids.len());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
