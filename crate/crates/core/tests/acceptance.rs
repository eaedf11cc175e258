//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any
//! criterion fails.

use qbt_core::verify::{run, Level, References};

fn main() {
    let results = run(Level::Full, &References::default());
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
