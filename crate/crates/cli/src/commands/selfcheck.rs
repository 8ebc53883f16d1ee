use anyhow::Result;
use geonas::selfcheck::{all_passed, run_all};

pub fn run() -> Result<bool> {
    let results = run_all();
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    for r in &results {
        let tag = if r.passed { "PASS" } else { "FAIL" };
        println!("{tag} {:width$} {}", r.name, r.detail);
    }
    let ok = all_passed(&results);
    println!(
        "{} of {} checks passed",
        results.iter().filter(|r| r.passed).count(),
        results.len()
    );
    Ok(ok)
}
