//! The seven acceptance criteria. Prints one PASS/FAIL line per criterion.

use boundary_noise_lab::{run_suite, SUITES};
use std::time::{Duration, Instant};

#[test]
fn acceptance() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (i, name) in SUITES.iter().enumerate() {
        let t = Instant::now();
        match run_suite(name) {
            Ok(r) => {
                for c in r.checks.iter().filter(|c| !c.pass) {
                    eprintln!("  {}: {}", c.name, c.detail);
                }
                println!("{}. {} [{:.0}s]", i + 1, r.summary(), t.elapsed().as_secs_f64());
                if !r.passed() {
                    failures.push(name.to_string());
                }
            }
            Err(e) => {
                println!("{}. FAIL {name}: {e}", i + 1);
                failures.push(name.to_string());
            }
        }
    }
    let total = start.elapsed();
    println!("total {:.0}s", total.as_secs_f64());
    assert!(failures.is_empty(), "failed: {failures:?}");
    assert!(total < Duration::from_secs(30 * 60), "acceptance run took {total:?}");
}
