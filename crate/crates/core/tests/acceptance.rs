//! One line per acceptance criterion; exits nonzero if any criterion fails.
//! Runs without the libtest harness so the lines are never captured.

use std::process::ExitCode;

use womkit_core::selftest;

fn main() -> ExitCode {
    let reports = selftest::run_all();
    for r in &reports {
        println!("{r}");
    }
    let failed: Vec<u32> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("acceptance: {} passed, {} failed", reports.len() - failed.len(), failed.len());
    if reports.len() != 10 || !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
