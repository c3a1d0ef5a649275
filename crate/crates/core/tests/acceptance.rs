//! Runs every acceptance criterion and prints one line per criterion.
//! Set `NSBF_QUICK=1` for the reduced eigenvalue count.

use std::process::ExitCode;

fn main() -> ExitCode {
    let quick = std::env::var_os("NSBF_QUICK").is_some_and(|v| v != "0");
    let outcomes = nsbf::acceptance::run(quick);
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
